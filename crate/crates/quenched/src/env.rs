//! Environment symbol streams: the base system as a seeded two-sided window.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const LAW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Iid { probs: Vec<f64> },
    Markov { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    alphabet_size: usize,
    law: Law,
    stationary: Vec<f64>,
}

impl EnvModel {
    pub fn new(alphabet_size: usize, law: Law) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::Config("alphabet_size must be at least 1".into()));
        }
        let stationary = match &law {
            Law::Iid { probs } => {
                check_prob_vector(probs, alphabet_size, "probability vector")?;
                probs.clone()
            }
            Law::Markov { matrix } => {
                if matrix.len() != alphabet_size {
                    return Err(Error::Config(format!(
                        "transition matrix has {} rows, alphabet has {}",
                        matrix.len(),
                        alphabet_size
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    check_prob_vector(row, alphabet_size, &format!("transition row {i}"))?;
                }
                stationary_of(matrix)
            }
        };
        Ok(EnvModel {
            alphabet_size,
            law,
            stationary,
        })
    }

    /// Single-symbol environment (deterministic dynamics).
    pub fn deterministic() -> Self {
        EnvModel::new(1, Law::Iid { probs: vec![1.0] }).unwrap()
    }

    pub fn iid(probs: Vec<f64>) -> Result<Self> {
        EnvModel::new(probs.len(), Law::Iid { probs })
    }

    pub fn markov(matrix: Vec<Vec<f64>>) -> Result<Self> {
        EnvModel::new(matrix.len(), Law::Markov { matrix })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }
}

fn check_prob_vector(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::Config(format!("{what} has length {}, expected {len}", p.len())));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Config(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > LAW_TOL {
        return Err(Error::Config(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Left Perron vector by power iteration from the uniform vector.
fn stationary_of(p: &[Vec<f64>]) -> Vec<f64> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                next[j] += pi[i] * p[i][j];
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let diff = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        if diff < 1e-14 {
            break;
        }
    }
    pi
}

fn sample_from(p: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i as u32;
        }
    }
    (p.len() - 1) as u32
}

/// Two-sided window of symbols indexed by j in [-n_past, n_future].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvPath {
    seed: u64,
    symbols: Arc<Vec<u32>>,
    // storage index of path index 0
    origin: i64,
    lo: i64,
    hi: i64,
}

impl EnvPath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Inclusive window bounds in current coordinates.
    pub fn bounds(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn symbol(&self, j: i64) -> Result<u32> {
        if j < self.lo || j > self.hi {
            return Err(Error::OutOfWindow {
                what: "symbol",
                needed: j,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.symbols[(self.origin + j) as usize])
    }

    pub fn symbols_in(&self, lo: i64, hi: i64) -> Result<Vec<u32>> {
        (lo..=hi).map(|j| self.symbol(j)).collect()
    }

    /// Same storage restricted to a smaller window.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<EnvPath> {
        if lo < self.lo || hi > self.hi || lo > 0 || hi < 0 {
            return Err(Error::OutOfWindow {
                what: "restrict",
                needed: if lo < self.lo { lo } else { hi },
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(EnvPath {
            lo,
            hi,
            ..self.clone()
        })
    }

    /// A path built from an explicit list, origin at `origin` within the list.
    pub fn from_symbols(symbols: Vec<u32>, origin: usize) -> EnvPath {
        let len = symbols.len() as i64;
        EnvPath {
            seed: 0,
            symbols: Arc::new(symbols),
            origin: origin as i64,
            lo: -(origin as i64),
            hi: len - 1 - origin as i64,
        }
    }
}

pub fn sample_path(model: &EnvModel, seed: u64, n_past: usize, n_future: usize) -> EnvPath {
    let len = n_past + n_future + 1;
    let mut symbols = vec![0u32; len];
    let origin = n_past;
    // independent streams for the future (incl. origin) and the past,
    // so nested windows agree on their overlap
    let mut fwd = ChaCha8Rng::seed_from_u64(seed);
    fwd.set_stream(0);
    let mut bwd = ChaCha8Rng::seed_from_u64(seed);
    bwd.set_stream(1);
    if model.alphabet_size > 1 {
        match &model.law {
            Law::Iid { probs } => {
                for j in 0..=n_future {
                    symbols[origin + j] = sample_from(probs, &mut fwd);
                }
                for j in 1..=n_past {
                    symbols[origin - j] = sample_from(probs, &mut bwd);
                }
            }
            Law::Markov { matrix } => {
                let pi = &model.stationary;
                let k = model.alphabet_size;
                symbols[origin] = sample_from(pi, &mut fwd);
                for j in 1..=n_future {
                    let prev = symbols[origin + j - 1] as usize;
                    symbols[origin + j] = sample_from(&matrix[prev], &mut fwd);
                }
                // time reversal: P^(i, j) = pi_j P(j, i) / pi_i
                let rev: Vec<Vec<f64>> = (0..k)
                    .map(|i| {
                        let mut row: Vec<f64> = (0..k)
                            .map(|j| if pi[i] > 0.0 { pi[j] * matrix[j][i] / pi[i] } else { 0.0 })
                            .collect();
                        let s: f64 = row.iter().sum();
                        if s > 0.0 {
                            row.iter_mut().for_each(|x| *x /= s);
                        } else {
                            row[i] = 1.0;
                        }
                        row
                    })
                    .collect();
                for j in 1..=n_past {
                    let next = symbols[origin - j + 1] as usize;
                    symbols[origin - j] = sample_from(&rev[next], &mut bwd);
                }
            }
        }
    }
    EnvPath {
        seed,
        symbols: Arc::new(symbols),
        origin: origin as i64,
        lo: -(n_past as i64),
        hi: n_future as i64,
    }
}

/// theta^k: the new index j reads the old index j + k.
pub fn shift(path: &EnvPath, k: i64) -> Result<EnvPath> {
    if k < path.lo || k > path.hi {
        return Err(Error::OutOfWindow {
            what: "shift origin",
            needed: k,
            lo: path.lo,
            hi: path.hi,
        });
    }
    Ok(EnvPath {
        seed: path.seed,
        symbols: path.symbols.clone(),
        origin: path.origin + k,
        lo: path.lo - k,
        hi: path.hi - k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub kappa: f64,
    pub rho: f64,
    /// bounds for lags 1..=len
    pub values: Vec<f64>,
    pub summable: bool,
}

/// Geometric bound phi(n) <= kappa rho^n from the second singular value of
/// D^{1/2} P D^{-1/2}.
pub fn phi_mixing_profile(model: &EnvModel, lags: usize) -> MixingProfile {
    match &model.law {
        Law::Iid { .. } => MixingProfile {
            kappa: 0.0,
            rho: 0.0,
            values: vec![0.0; lags],
            summable: true,
        },
        Law::Markov { matrix } => {
            let k = model.alphabet_size;
            let pi = &model.stationary;
            if k == 1 {
                return MixingProfile {
                    kappa: 0.0,
                    rho: 0.0,
                    values: vec![0.0; lags],
                    summable: true,
                };
            }
            let m = DMatrix::from_fn(k, k, |i, j| {
                if pi[i] > 0.0 && pi[j] > 0.0 {
                    pi[i].sqrt() * matrix[i][j] / pi[j].sqrt()
                } else {
                    0.0
                }
            });
            let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let rho = sv.get(1).cloned().unwrap_or(0.0).min(1.0);
            let kappa = pi
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| 0.5 * ((1.0 - p) / p).sqrt())
                .fold(0.0, f64::max);
            let summable = rho < 1.0 - 1e-12;
            let values = (1..=lags)
                .map(|n| (kappa * rho.powi(n as i32)).min(1.0))
                .collect();
            MixingProfile {
                kappa,
                rho,
                values,
                summable,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_symbol_path() {
        let m = EnvModel::deterministic();
        let p = sample_path(&m, 9, 3, 3);
        assert_eq!(p.symbols_in(-3, 3).unwrap(), vec![0; 7]);
    }

    #[test]
    fn determinism_and_nesting() {
        let m = EnvModel::iid(vec![0.5, 0.5]).unwrap();
        let a = sample_path(&m, 42, 10, 10);
        let b = sample_path(&m, 42, 10, 10);
        assert_eq!(a, b);
        let c = sample_path(&m, 42, 20, 30);
        assert_eq!(a.symbols_in(-10, 10).unwrap(), c.symbols_in(-10, 10).unwrap());
    }

    #[test]
    fn frequency_lln() {
        let m = EnvModel::iid(vec![0.5, 0.5]).unwrap();
        let p = sample_path(&m, 7, 0, 100_000);
        let ones = p.symbols_in(0, 100_000).unwrap().iter().filter(|&&s| s == 0).count();
        let f = ones as f64 / 100_001.0;
        assert!((0.495..=0.505).contains(&f), "{f}");
    }

    #[test]
    fn bad_law_rejected() {
        assert!(EnvModel::iid(vec![0.5, 0.6]).is_err());
        assert!(EnvModel::markov(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn shift_bookkeeping() {
        let m = EnvModel::iid(vec![0.3, 0.7]).unwrap();
        let p = sample_path(&m, 1, 10, 10);
        assert_eq!(shift(&p, 0).unwrap(), p);
        let q = shift(&p, 1).unwrap();
        assert_eq!(q.symbol(-1).unwrap(), p.symbol(0).unwrap());
        let r = shift(&shift(&p, 3).unwrap(), -3).unwrap();
        assert_eq!(r.symbols_in(-10, 10).unwrap(), p.symbols_in(-10, 10).unwrap());
        assert!(matches!(shift(&p, 11), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn mixing_profiles() {
        let iid = EnvModel::iid(vec![0.5, 0.5]).unwrap();
        assert!(phi_mixing_profile(&iid, 5).values.iter().all(|&v| v == 0.0));
        let id = EnvModel::markov(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let prof = phi_mixing_profile(&id, 5);
        assert!(!prof.summable);
        let two = EnvModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let prof = phi_mixing_profile(&two, 30);
        assert!((prof.rho - 0.7).abs() < 1e-10);
        // exact TV distance of n-step rows from stationarity
        let pi = two.stationary().to_vec();
        let mut pn = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = [[0.9, 0.1], [0.2, 0.8]];
        for n in 1..=30 {
            let mut next = vec![vec![0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (0..2).map(|l| pn[i][l] * p[l][j]).sum();
                }
            }
            pn = next;
            let tv = (0..2)
                .map(|i| 0.5 * (0..2).map(|j| (pn[i][j] - pi[j]).abs()).sum::<f64>())
                .fold(0.0, f64::max);
            assert!(prof.values[n - 1] >= tv - 1e-15);
            assert!((tv / 0.7f64.powi(n as i32) - 2.0 / 3.0).abs() < 1e-8);
        }
    }
}
