//! Pressure jets at z = 0, the Faà di Bruno moment expansion and asymptotic
//! moments, by operator route and by Monte Carlo.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::sample_orbit_under_gibbs;
use crate::error::{Error, Result};
use crate::grid::{dot, sup};
use crate::operators::Cocycle;
use crate::rpf::{gibbs_weights, h_sweep, nu_sweep, track_branch};
use crate::series::exp_taylor;
use crate::stats::{binomial, factorial, median, power_fit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetOptions {
    /// highest derivative order
    pub order: usize,
    pub radius: f64,
    pub nodes: usize,
    pub depth: usize,
    /// compare against extraction at radius / 2 for orders <= 4
    pub check_radius: bool,
}

impl Default for JetOptions {
    fn default() -> Self {
        JetOptions {
            order: 6,
            radius: 0.05,
            nodes: 64,
            depth: 60,
            check_radius: true,
        }
    }
}

/// Derivatives Pi^{(l)}(0), l = 0..=K, per fiber, and ln W derivatives on
/// selected fibers, with W(z) = mu(h(z)) for h normalized by nu(h) = 1.
#[derive(Debug, Clone)]
pub struct PressureJet {
    pub lo: i64,
    pub derivs: Vec<Vec<C64>>,
    pub lnw: Vec<(i64, Vec<C64>)>,
    pub radius: f64,
    pub nodes: usize,
}

impl PressureJet {
    /// A single-fiber jet with the given averaged derivatives (index l).
    pub fn synthetic(pi: &[f64], lnw: &[f64]) -> Self {
        PressureJet {
            lo: 0,
            derivs: vec![pi.iter().map(|&v| C64::new(v, 0.0)).collect()],
            lnw: vec![(1, lnw.iter().map(|&v| C64::new(v, 0.0)).collect())],
            radius: 0.0,
            nodes: 0,
        }
    }

    pub fn order(&self) -> usize {
        self.derivs.first().map(|d| d.len() - 1).unwrap_or(0)
    }

    pub fn fiber_count(&self) -> usize {
        self.derivs.len()
    }

    pub fn at(&self, fiber: i64, l: usize) -> C64 {
        self.derivs[(fiber - self.lo) as usize][l]
    }

    /// Average of Pi^{(l)} over fibers [from, from + n). A single-fiber jet
    /// stands for a stationary average and is returned as is.
    pub fn average(&self, l: usize, from: i64, n: usize) -> C64 {
        if self.derivs.len() == 1 {
            return self.derivs[0][l];
        }
        let s: C64 = (from..from + n as i64).map(|k| self.at(k, l)).sum();
        s / n as f64
    }

    /// Averages for l = 0..=K over [from, from + n).
    pub fn averages(&self, from: i64, n: usize) -> Vec<C64> {
        (0..=self.order()).map(|l| self.average(l, from, n)).collect()
    }

    pub fn lnw_at(&self, fiber: i64) -> Option<&[C64]> {
        if self.derivs.len() == 1 && self.lnw.len() == 1 {
            return Some(&self.lnw[0].1);
        }
        self.lnw.iter().find(|(f, _)| *f == fiber).map(|(_, v)| v.as_slice())
    }
}

/// l-th derivatives at 0 from values on the circle |z| = r at angles 2 pi m / M.
pub fn cauchy_derivatives(values: &[C64], r: f64, order: usize) -> Vec<C64> {
    let m = values.len();
    (0..=order)
        .map(|l| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * (l * j) as f64 / m as f64))
                .sum();
            s * factorial(l) / (m as f64 * r.powi(l as i32))
        })
        .collect()
}

fn circle_nodes(r: f64, m: usize) -> Vec<C64> {
    (0..m).map(|j| C64::from_polar(r, 2.0 * PI * j as f64 / m as f64)).collect()
}

const RADIAL_STEPS: usize = 4;

/// z values on the curve 0 -> r (radially) -> around the circle, and the
/// index of each circle node within the curve. Only nodes with
/// non-negative imaginary part are computed; the rest follow by
/// conjugation since the operators are real.
fn curve(r: f64, m: usize) -> (Vec<C64>, usize) {
    let mut zs: Vec<C64> = (0..RADIAL_STEPS).map(|j| C64::new(r * j as f64 / RADIAL_STEPS as f64, 0.0)).collect();
    let first = zs.len();
    zs.extend(circle_nodes(r, m).into_iter().take(m / 2 + 1));
    (zs, first)
}

fn mirror(upper: &[C64], m: usize) -> Vec<C64> {
    (0..m).map(|j| if j <= m / 2 { upper[j] } else { upper[m - j].conj() }).collect()
}

/// Pressure derivatives per fiber and ln W derivatives per requested fiber.
type RadiusJets = (Vec<Vec<C64>>, Vec<Vec<C64>>);

fn jets_at_radius(cocycle: &Cocycle, lo: i64, hi: i64, w_fibers: &[i64], opts: &JetOptions, r: f64) -> Result<RadiusJets> {
    let m = opts.nodes;
    if !m.is_multiple_of(2) || m < 4 * opts.order.max(1) {
        return Err(Error::Domain(format!("need an even node count >= 4K, got {m}")));
    }
    let (zs, first) = curve(r, m);
    let results: Vec<Result<(Vec<C64>, Vec<C64>)>> = zs
        .par_iter()
        .map(|&z| {
            let fz = cocycle.at(z);
            let sweep = nu_sweep(&fz, lo, hi, opts.depth)?;
            let mut w = Vec::with_capacity(w_fibers.len());
            for &f in w_fibers {
                let h = &h_sweep(&fz, f, f, opts.depth)?[0];
                let nu = if f >= lo && f <= hi {
                    sweep.nu(f).to_vec()
                } else {
                    nu_sweep(&fz, f, f, opts.depth)?.nu(f).to_vec()
                };
                let scale = dot(&nu, h);
                w.push((h.iter().map(|x| x / scale).collect::<Vec<_>>(), nu));
            }
            // W needs mu = h(0) nu(0); stash h and nu and finish below
            let flat_h: Vec<C64> = w.iter().flat_map(|(h, _)| h.clone()).collect();
            let flat_nu: Vec<C64> = w.iter().flat_map(|(_, n)| n.clone()).collect();
            let mut packed = flat_h;
            packed.extend(flat_nu);
            Ok((sweep.lambda, packed))
        })
        .collect();
    let results: Vec<(Vec<C64>, Vec<C64>)> = results.into_iter().collect::<Result<_>>()?;
    let nsteps = (hi - lo) as usize;
    let mut derivs = Vec::with_capacity(nsteps);
    let mut along = vec![C64::new(0.0, 0.0); zs.len() + m / 2 - 1];
    for k in 0..nsteps {
        let lam_upper: Vec<C64> = results.iter().map(|(l, _)| l[k]).collect();
        let circ = mirror(&lam_upper[first..], m);
        along.clear();
        along.extend_from_slice(&lam_upper[..first]);
        along.extend_from_slice(&circ);
        let logs = track_branch(&along)?;
        let p0 = logs[0];
        let pi_circle: Vec<C64> = logs[first..].iter().map(|v| v - p0).collect();
        let mut d = cauchy_derivatives(&pi_circle, r, opts.order);
        d[0] = p0;
        derivs.push(d);
    }
    let g = cocycle.grid().len();
    let nw = w_fibers.len();
    let mut lnw = Vec::with_capacity(nw);
    for i in 0..nw {
        let (_, p0) = &results[0];
        let h0 = &p0[i * g..(i + 1) * g];
        let nu0 = &p0[nw * g + i * g..nw * g + (i + 1) * g];
        let mu: Vec<C64> = h0.iter().zip(nu0).map(|(a, b)| a * b).collect();
        let wv: Vec<C64> = results.iter().map(|(_, p)| dot(&mu, &p[i * g..(i + 1) * g])).collect();
        let circ = mirror(&wv[first..], m);
        let mut along = wv[..first].to_vec();
        along.extend_from_slice(&circ);
        let logs = track_branch(&along)?;
        let circle: Vec<C64> = logs[first..].to_vec();
        lnw.push(cauchy_derivatives(&circle, r, opts.order));
    }
    Ok((derivs, lnw))
}

/// Pressure jets on steps lo..hi and ln W jets on `w_fibers`.
pub fn jet_at_zero(cocycle: &Cocycle, lo: i64, hi: i64, w_fibers: &[i64], opts: &JetOptions) -> Result<PressureJet> {
    let (derivs, lnw) = jets_at_radius(cocycle, lo, hi, w_fibers, opts, opts.radius)?;
    if opts.check_radius {
        let (d2, _) = jets_at_radius(cocycle, lo, hi, w_fibers, opts, opts.radius / 2.0)?;
        for (a, b) in derivs.iter().zip(&d2) {
            for l in 1..=opts.order.min(4) {
                let (x, y) = (a[l], b[l]);
                if (x - y).norm() > 1e-6 * x.norm().max(1.0) {
                    return Err(Error::Radius { order: l, a: x.re, b: y.re });
                }
            }
        }
    }
    Ok(PressureJet {
        lo,
        derivs,
        lnw: w_fibers.iter().cloned().zip(lnw).collect(),
        radius: opts.radius,
        nodes: opts.nodes,
    })
}

/// Gamma_{j,s}: tuples (m_2, ..., m_j) with sum l m_l = j and sum m_l = s.
pub fn gamma_index_sets(j: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(l: usize, j: usize, left_sum: usize, left_count: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if l > j {
            if left_sum == 0 && left_count == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let max_m = (left_sum / l).min(left_count);
        for m in 0..=max_m {
            cur.push(m);
            rec(l + 1, j, left_sum - l * m, left_count - m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if j >= 2 {
        rec(2, j, j, s, &mut Vec::new(), &mut out);
    }
    out
}

/// lambda_{omega,n}^{(j)}(0) from averaged jets avg[l] = Pi-bar^{(l)}.
pub fn faa_di_bruno_lambda_derivative(avg: &[C64], n: f64, j: usize) -> C64 {
    if j == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for s in 1..=j / 2 {
        let mut inner = C64::new(0.0, 0.0);
        for tuple in gamma_index_sets(j, s) {
            let mut term = C64::new(1.0, 0.0);
            for (i, &m) in tuple.iter().enumerate() {
                let l = i + 2;
                if m > 0 {
                    term *= avg[l].powu(m as u32) / (factorial(l).powi(m as i32) * factorial(m));
                }
            }
            inner += term;
        }
        total += inner * n.powi(s as i32);
    }
    total * factorial(j)
}

pub fn c_coefficient(k: usize) -> f64 {
    2f64.powf(-(k as f64) / 2.0) * factorial(k) / factorial(k / 2)
}

pub fn d_coefficient(k: usize) -> f64 {
    factorial(k) / 6.0 * 2f64.powf(-((k - 3) as f64) / 2.0) / factorial((k - 3) / 2)
}

#[derive(Debug, Clone)]
pub struct AsymptoticMoment {
    pub k: usize,
    pub n: usize,
    pub limit: f64,
    /// n^{-floor(k/2)} sum_j C(k, j) lambda_n^{(j)}(0) W^{(k-j)}(0)
    pub expansion: f64,
    /// coefficient of n^s in the unnormalized expansion, s = 0..=floor(k/2)
    pub corrections: Vec<f64>,
}

/// Limit C_k sigma^k (even) or D_k sigma^{k-3} zeta (odd) from averaged
/// jets, with the finite-n expansion and its n^s coefficients.
pub fn asymptotic_moment(avg: &[C64], lnw: &[C64], k: usize, n: usize) -> Result<AsymptoticMoment> {
    if k < 2 {
        return Err(Error::Domain(format!("asymptotic moments need k >= 2, got {k}")));
    }
    if avg.len() <= k.clamp(2, 3) {
        return Err(Error::Order("jet too short".into()));
    }
    let s2 = avg[2].re;
    let limit = if k.is_multiple_of(2) {
        c_coefficient(k) * s2.powi(k as i32 / 2)
    } else {
        d_coefficient(k) * s2.powi((k as i32 - 3) / 2) * avg[3].re
    };
    let mut expansion = C64::new(0.0, 0.0);
    let mut corrections = vec![0.0; k / 2 + 1];
    if avg.len() > k && lnw.len() > k.saturating_sub(2) {
        let mut lw: Vec<C64> = (0..=k).map(|l| lnw.get(l).cloned().unwrap_or_default()).collect();
        lw[0] = C64::new(0.0, 0.0);
        let wt = exp_taylor(&lw);
        let wd: Vec<C64> = (0..=k).map(|l| wt[l] * factorial(l)).collect();
        for j in 0..=k {
            expansion += binomial(k, j) * faa_di_bruno_lambda_derivative(avg, n as f64, j) * wd[k - j];
            // split by powers of n
            if j == 0 {
                corrections[0] += wd[k].re;
            } else {
                for s in 1..=j / 2 {
                    let mut inner = 0.0;
                    for tuple in gamma_index_sets(j, s) {
                        let mut term = C64::new(1.0, 0.0);
                        for (i, &m) in tuple.iter().enumerate() {
                            let l = i + 2;
                            if m > 0 {
                                term *= avg[l].powu(m as u32) / (factorial(l).powi(m as i32) * factorial(m));
                            }
                        }
                        inner += term.re;
                    }
                    corrections[s] += binomial(k, j) * factorial(j) * inner * wd[k - j].re;
                }
            }
        }
    }
    Ok(AsymptoticMoment {
        k,
        n,
        limit,
        expansion: expansion.re / (n as f64).powi(k as i32 / 2),
        corrections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    pub radius: f64,
    pub nodes: usize,
    pub depth: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            radius: 0.05,
            nodes: 64,
            depth: 60,
        }
    }
}

fn require_normalized(cocycle: &Cocycle) -> Result<()> {
    if cocycle.model().is_normalized() || cocycle.normalization().is_some() {
        Ok(())
    } else {
        Err(Error::Domain("moment routes need a normalized cocycle".into()))
    }
}

/// gamma_{k,n} = n^{-floor(k/2)} d^k/dz^k mu_n(A_z^{0,n} 1) at 0 for all
/// requested k and n; indexed [k][n].
pub fn operator_moments(cocycle: &Cocycle, ns: &[usize], ks: &[usize], opts: &MomentOptions) -> Result<Vec<Vec<f64>>> {
    require_normalized(cocycle)?;
    let n_max = *ns.iter().max().ok_or_else(|| Error::Domain("empty n list".into()))?;
    let kmax = *ks.iter().max().unwrap_or(&0);
    if !opts.nodes.is_multiple_of(2) || opts.nodes < 2 * kmax + 2 {
        return Err(Error::Domain("too few Cauchy nodes for the requested order".into()));
    }
    let r = opts.radius.min(1.0 / (n_max as f64).sqrt());
    let gibbs = gibbs_at(cocycle, ns, opts.depth)?;
    let nodes = circle_nodes(r, opts.nodes);
    let upper: Vec<Result<Vec<C64>>> = nodes[..=opts.nodes / 2]
        .par_iter()
        .map(|&z| {
            let fz = cocycle.at(z);
            let g0 = cocycle.grid().len();
            let mut g = vec![C64::new(1.0, 0.0); g0];
            let mut ls = C64::new(0.0, 0.0);
            let mut out = vec![C64::new(0.0, 0.0); ns.len()];
            for step in 0..=n_max {
                for (i, &n) in ns.iter().enumerate() {
                    if n == step {
                        out[i] = ls.exp() * dot(&gibbs[i], &g);
                    }
                }
                if step == n_max {
                    break;
                }
                g = fz.apply(step as i64, &g)?;
                let s = sup(&g);
                if !(s > 0.0) {
                    return Err(Error::Degenerate("cocycle iterate vanished".into()));
                }
                g.iter_mut().for_each(|x| *x /= s);
                ls += s.ln();
            }
            Ok(out)
        })
        .collect();
    let upper: Vec<Vec<C64>> = upper.into_iter().collect::<Result<_>>()?;
    let m = opts.nodes;
    let mut result = vec![vec![0.0; ns.len()]; ks.len()];
    for (i, &n) in ns.iter().enumerate() {
        let vals: Vec<C64> = mirror(&upper.iter().map(|v| v[i]).collect::<Vec<_>>(), m);
        let d = cauchy_derivatives(&vals, r, kmax);
        for (ki, &k) in ks.iter().enumerate() {
            result[ki][i] = d[k].re / (n as f64).powi(k as i32 / 2);
        }
    }
    Ok(result)
}

fn gibbs_at(cocycle: &Cocycle, ns: &[usize], depth: usize) -> Result<Vec<Vec<C64>>> {
    let n_max = *ns.iter().max().unwrap() as i64;
    let all = gibbs_weights(cocycle, 0, n_max, depth)?;
    Ok(ns
        .iter()
        .map(|&n| all[n].iter().map(|&w| C64::new(w, 0.0)).collect())
        .collect())
}

/// Draws of S_n under mu_0, split into fixed chunks with their own RNG
/// streams so the result does not depend on the worker count.
pub fn mc_samples(cocycle: &Cocycle, n: usize, samples: usize, seed: u64, depth: usize) -> Result<Vec<f64>> {
    require_normalized(cocycle)?;
    let gibbs = gibbs_weights(cocycle, n as i64, n as i64, depth)?.remove(0);
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).map(|_| sample_orbit_under_gibbs(cocycle, &gibbs, n, &mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(samples);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMoment {
    pub value: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub inconclusive: bool,
}

/// n^{-floor(k/2)} mean(S^k) with a percentile bootstrap interval (95%).
pub fn mc_moment(samples: &[f64], k: usize, n: usize, boot: usize, seed: u64, tol: f64) -> McMoment {
    let scale = (n as f64).powi(k as i32 / 2);
    let vals: Vec<f64> = samples.iter().map(|s| s.powi(k as i32) / scale).collect();
    let m = vals.len();
    let value = vals.iter().sum::<f64>() / m as f64;
    let mut reps: Vec<f64> = (0..boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb007);
            rng.set_stream(b as u64);
            (0..m).map(|_| vals[rng.gen_range(0..m)]).sum::<f64>() / m as f64
        })
        .collect();
    reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_r = reps.iter().sum::<f64>() / boot as f64;
    let se = (reps.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / (boot as f64 - 1.0)).sqrt();
    let ci_lo = reps[((0.025 * boot as f64) as usize).min(boot - 1)];
    let ci_hi = reps[((0.975 * boot as f64) as usize).min(boot - 1)];
    McMoment {
        value,
        se,
        ci_lo,
        ci_hi,
        inconclusive: ci_hi - ci_lo > tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    OperatorJet,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub mc: Option<McMoment>,
}

pub fn empirical_moment(cocycle: &Cocycle, k: usize, n: usize, method: Method, opts: &MomentOptions) -> Result<MomentEstimate> {
    match method {
        Method::OperatorJet => {
            let v = operator_moments(cocycle, &[n], &[k], opts)?;
            Ok(MomentEstimate { value: v[0][0], mc: None })
        }
        Method::MonteCarlo { samples, seed } => {
            let s = mc_samples(cocycle, n, samples, seed, opts.depth)?;
            let mc = mc_moment(&s, k, n, 200, seed, f64::INFINITY);
            Ok(MomentEstimate { value: mc.value, mc: Some(mc) })
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub k: usize,
    pub ns: Vec<usize>,
    pub limit: f64,
    pub per_path: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
    /// max over n of median / (n^{-1/2} ln n)
    pub envelope: f64,
}

/// |gamma_{k,n} - gamma_k| over an n-grid for each path, with an
/// ensemble-median power fit.
pub fn moment_rate_experiment(cocycles: &[Cocycle], k: usize, ns: &[usize], limit: f64, opts: &MomentOptions) -> Result<RateReport> {
    let per_path: Vec<Vec<f64>> = cocycles
        .iter()
        .map(|c| {
            operator_moments(c, ns, &[k], opts).map(|v| v[0].iter().map(|g| (g - limit).abs()).collect())
        })
        .collect::<Result<_>>()?;
    Ok(rate_report(k, ns, limit, per_path))
}

pub fn rate_report(k: usize, ns: &[usize], limit: f64, per_path: Vec<Vec<f64>>) -> RateReport {
    let med: Vec<f64> = (0..ns.len())
        .map(|i| median(&per_path.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (a, b, r2) = power_fit(&nf, &med);
    let envelope = nf
        .iter()
        .zip(&med)
        .map(|(n, m)| m / (n.ln() / n.sqrt()))
        .fold(0.0, f64::max);
    RateReport {
        k,
        ns: ns.to_vec(),
        limit,
        per_path,
        median: med,
        exponent: b,
        constant: a.exp(),
        r2,
        envelope,
    }
}
