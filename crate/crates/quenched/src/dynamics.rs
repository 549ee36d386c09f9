//! Random expanding circle maps, potentials, observables, Birkhoff sums and
//! Monte-Carlo sampling of S_n under the fiber Gibbs measures.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::env::EnvPath;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{Cocycle, FiberModel};

/// Closed-form real functions on [0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// c0 + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)
    Trig { c0: f64, cos: Vec<f64>, sin: Vec<f64> },
    /// piecewise constant: values[i] on [edges[i-1], edges[i])
    Steps { edges: Vec<f64>, values: Vec<f64> },
    Affine { slope: f64, intercept: f64 },
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Constant(0.0)
    }

    pub fn cos(coeffs: &[f64]) -> Self {
        ScalarField::Trig {
            c0: 0.0,
            cos: coeffs.to_vec(),
            sin: vec![],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Trig { c0, cos, sin } => {
                let mut s = *c0;
                for (k, a) in cos.iter().enumerate() {
                    s += a * (2.0 * PI * (k + 1) as f64 * x).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    s += b * (2.0 * PI * (k + 1) as f64 * x).sin();
                }
                s
            }
            ScalarField::Steps { edges, values } => {
                let x = x.rem_euclid(1.0);
                values[edges.partition_point(|&e| e <= x)]
            }
            ScalarField::Affine { slope, intercept } => slope * x + intercept,
        }
    }

    /// The field minus a constant.
    pub fn offset(&self, c: f64) -> Self {
        match self {
            ScalarField::Constant(a) => ScalarField::Constant(a - c),
            ScalarField::Trig { c0, cos, sin } => ScalarField::Trig {
                c0: c0 - c,
                cos: cos.clone(),
                sin: sin.clone(),
            },
            ScalarField::Steps { edges, values } => ScalarField::Steps {
                edges: edges.clone(),
                values: values.iter().map(|v| v - c).collect(),
            },
            ScalarField::Affine { slope, intercept } => ScalarField::Affine {
                slope: *slope,
                intercept: intercept - c,
            },
        }
    }

    /// Exact Lebesgue integral over [0, 1).
    pub fn lebesgue_mean(&self) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Trig { c0, .. } => *c0,
            ScalarField::Steps { edges, values } => {
                let mut acc = 0.0;
                let mut left = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let right = if i < edges.len() { edges[i] } else { 1.0 };
                    acc += v * (right - left);
                    left = right;
                }
                acc
            }
            ScalarField::Affine { slope, intercept } => slope / 2.0 + intercept,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            ScalarField::Constant(c) => *c == 0.0,
            ScalarField::Trig { c0, cos, sin } => {
                *c0 == 0.0 && cos.iter().all(|&a| a == 0.0) && sin.iter().all(|&a| a == 0.0)
            }
            ScalarField::Steps { values, .. } => values.iter().all(|&v| v == 0.0),
            ScalarField::Affine { slope, intercept } => *slope == 0.0 && *intercept == 0.0,
        }
    }
}

/// T x = m x + eps sin(2 pi x) / (2 pi) mod 1; eps = 0 is the affine map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapKind {
    pub slope: u32,
    pub eps: f64,
}

impl MapKind {
    pub fn affine(slope: u32) -> Self {
        MapKind { slope, eps: 0.0 }
    }

    fn lift(&self, x: f64) -> f64 {
        self.slope as f64 * x + self.eps * (2.0 * PI * x).sin() / (2.0 * PI)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.slope as f64 + self.eps * (2.0 * PI * x).cos()
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.lift(x).rem_euclid(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapFamily {
    pub maps: Vec<MapKind>,
}

impl MapFamily {
    pub fn new(maps: Vec<MapKind>) -> Result<Self> {
        for (s, m) in maps.iter().enumerate() {
            if m.slope < 2 {
                return Err(Error::Config(format!("symbol {s}: slope must be >= 2")));
            }
            if m.slope as f64 - m.eps.abs() <= 1.0 {
                return Err(Error::Config(format!("symbol {s}: perturbation destroys expansion")));
            }
        }
        Ok(MapFamily { maps })
    }

    pub fn affine(slopes: &[u32]) -> Result<Self> {
        MapFamily::new(slopes.iter().map(|&m| MapKind::affine(m)).collect())
    }

    pub fn max_branches(&self) -> usize {
        self.maps.iter().map(|m| m.slope as usize).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// -ln |T'|
    Geometric,
    Field(ScalarField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservablePair {
    pub potential: Vec<Potential>,
    pub u: Vec<ScalarField>,
    pub alpha: f64,
}

impl ObservablePair {
    /// Geometric potential for every symbol.
    pub fn geometric(u: Vec<ScalarField>) -> Self {
        ObservablePair {
            potential: vec![Potential::Geometric; u.len()],
            u,
            alpha: 1.0,
        }
    }

    pub fn phi(&self, map: &MapKind, symbol: usize, y: f64) -> f64 {
        match &self.potential[symbol] {
            Potential::Geometric => -map.derivative(y).ln(),
            Potential::Field(f) => f.eval(y),
        }
    }
}

/// All y with T y = x, labelled by branch.
pub fn inverse_branches(family: &MapFamily, symbol: usize, x: f64) -> Vec<(usize, f64)> {
    let map = family.maps[symbol];
    let m = map.slope as f64;
    (0..map.slope as usize)
        .map(|i| {
            let target = x + i as f64;
            let mut y = target / m;
            if map.eps != 0.0 {
                for _ in 0..60 {
                    let step = (map.lift(y) - target) / map.derivative(y);
                    y -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
            }
            (i, y)
        })
        .collect()
}

/// sum_{i<n} u_{theta^i omega}(T^i_omega x), iterating forward in floating point.
pub fn birkhoff_sum(path: &EnvPath, family: &MapFamily, obs: &ObservablePair, x: f64, n: usize) -> Result<f64> {
    let mut x = x;
    let mut s = 0.0;
    for i in 0..n {
        let sym = path.symbol(i as i64)? as usize;
        s += obs.u[sym].eval(x);
        x = family.maps[sym].apply(x);
    }
    Ok(s)
}

/// T^n_omega x along the path.
pub fn iterate_map(path: &EnvPath, family: &MapFamily, x: f64, n: usize) -> Result<f64> {
    let mut x = x;
    for i in 0..n {
        let sym = path.symbol(i as i64)? as usize;
        x = family.maps[sym].apply(x);
    }
    Ok(x)
}

/// Subtracts, per symbol, the average of mu_k(u_s) over the supplied fibers
/// that carry symbol s. `gibbs` holds (symbol, Gibbs weights on the grid).
pub fn center_observable(u: &[ScalarField], grid: &Grid, gibbs: &[(u32, Vec<C64>)]) -> Vec<ScalarField> {
    let mut sums = vec![0.0; u.len()];
    let mut counts = vec![0usize; u.len()];
    for (sym, w) in gibbs {
        let s = *sym as usize;
        let m: f64 = grid
            .nodes()
            .iter()
            .zip(w)
            .map(|(&x, wi)| (wi * u[s].eval(x)).re)
            .sum();
        sums[s] += m;
        counts[s] += 1;
    }
    u.iter()
        .enumerate()
        .map(|(s, f)| {
            if counts[s] == 0 {
                f.clone()
            } else {
                f.offset(sums[s] / counts[s] as f64)
            }
        })
        .collect()
}

fn sample_cell<R: Rng>(grid: &Grid, weights: &[f64], rng: &mut R) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = weights.len() - 1;
    for (j, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            pick = j;
            break;
        }
    }
    let (a, b) = grid.cell(pick);
    Ok((a + (b - a) * rng.gen::<f64>()).rem_euclid(1.0))
}

/// Draws S_n^omega u with x distributed by the fiber Gibbs measure.
///
/// The orbit is built backwards: x_n is drawn from mu at fiber n and each
/// earlier point is a preimage chosen with the normalized branch weights.
/// Forward float iteration of m x mod 1 loses a bit per step, this does not.
/// Markov cocycles run the chain forward in path time from the far fiber.
pub fn sample_orbit_under_gibbs<R: Rng>(cocycle: &Cocycle, gibbs_end: &[f64], n: usize, rng: &mut R) -> Result<f64> {
    if gibbs_end.iter().any(|&w| w < -1e-12) {
        return Err(Error::Sanity("negative Gibbs density cell".into()));
    }
    let grid = cocycle.grid();
    let model = cocycle.model();
    let mut x = sample_cell(grid, gibbs_end, rng)?;
    let mut s = 0.0;
    match model.fibers() {
        FiberModel::Transfer(t) => {
            let norm = cocycle.normalization();
            let mut wbuf = Vec::with_capacity(t.maps.max_branches());
            for k in (0..n as i64).rev() {
                let sym = cocycle.observable_symbol(k)? as usize;
                let map = &t.maps.maps[sym];
                let pre = inverse_branches(&t.maps, sym, x);
                wbuf.clear();
                for &(_, y) in &pre {
                    let mut w = t.obs.phi(map, sym, y).exp();
                    if let Some(nz) = norm {
                        w *= nz.h0_at(k, y)?;
                    }
                    wbuf.push(w);
                }
                let tot: f64 = wbuf.iter().sum();
                let mut u = rng.gen::<f64>() * tot;
                let mut pick = pre.len() - 1;
                for (i, &w) in wbuf.iter().enumerate() {
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                x = pre[pick].1;
                s += t.obs.u[sym].eval(x);
            }
        }
        FiberModel::Markov(mk) => {
            // step k maps fiber k+1 to fiber k in path time
            for k in (0..n as i64).rev() {
                let ks = cocycle.kernel_symbol(k)? as usize;
                let us = cocycle.observable_symbol(k)? as usize;
                let kern = &mk.kernels.kernels[ks];
                let bound = 1.0 / mk.kernels.alpha;
                let y = loop {
                    let y: f64 = rng.gen();
                    if rng.gen::<f64>() * bound <= kern.eval(x, y) {
                        break y;
                    }
                };
                x = y;
                s += mk.u[us].eval(x);
            }
        }
    }
    Ok(s)
}
