//! Discretized transfer and Markov operators and their cocycles.
//!
//! Every cocycle is indexed by abstract fibers k; step k maps functions on
//! fiber k to functions on fiber k + 1. For maps, fiber k is the path index
//! k. For Markov kernels the composition runs backwards in path time, so
//! fiber k is the path index -k.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{inverse_branches, MapFamily, ObservablePair, Potential, ScalarField};
use crate::env::{shift, EnvModel, EnvPath};
use crate::error::{Error, Result};
use crate::grid::{fiber_norm, sup, DenseOp, FiberField, Grid, GridKind, NormSpec};

/// r(x, y) = 1 + sum_k cos[k-1] cos(2 pi k (x - y - shift)).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub cos: Vec<f64>,
    pub shift: f64,
}

impl Kernel {
    pub fn independent() -> Self {
        Kernel { cos: vec![], shift: 0.0 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = x - y - self.shift;
        1.0 + self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * PI * (k + 1) as f64 * d).cos())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    pub kernels: Vec<Kernel>,
    pub alpha: f64,
    pub nodes: usize,
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferModel {
    pub maps: MapFamily,
    pub obs: ObservablePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    pub kernels: KernelFamily,
    pub u: Vec<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiberModel {
    Transfer(TransferModel),
    Markov(MarkovModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

struct Branch {
    // u at the preimage of each output node
    u: Vec<f64>,
    // e^{phi(y_i(k))} D(y_i(k) - x_j), row-major
    b: Vec<f64>,
}

enum Precomp {
    Transfer(Vec<Vec<Branch>>),
    Markov { kernels: Vec<Vec<f64>>, u: Vec<Vec<f64>> },
}

/// Environment law, per-symbol fiber data and the discretization.
pub struct Model {
    env: EnvModel,
    fibers: FiberModel,
    grid: Arc<Grid>,
    pre: Precomp,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("env", &self.env)
            .field("fibers", &self.fibers)
            .field("grid_len", &self.grid.len())
            .finish()
    }
}

impl Model {
    /// `grid` is used for transfer models; Markov models build their own
    /// quadrature grid from the kernel family.
    pub fn new(env: EnvModel, fibers: FiberModel, grid: Option<Arc<Grid>>) -> Result<Arc<Model>> {
        let a = env.alphabet_size();
        match &fibers {
            FiberModel::Transfer(t) => {
                if t.maps.maps.len() != a || t.obs.u.len() != a || t.obs.potential.len() != a {
                    return Err(Error::Config(format!(
                        "per-symbol records must have {a} entries (maps {}, u {}, potential {})",
                        t.maps.maps.len(),
                        t.obs.u.len(),
                        t.obs.potential.len()
                    )));
                }
                let grid = grid.ok_or_else(|| Error::Config("transfer model needs a grid".into()))?;
                if grid.kind() != GridKind::Circle {
                    return Err(Error::Config("transfer model needs a circle grid".into()));
                }
                let pre = Precomp::Transfer(
                    (0..a).map(|s| transfer_branches(&grid, &t.maps, &t.obs, s)).collect(),
                );
                Ok(Arc::new(Model { env, fibers, grid, pre }))
            }
            FiberModel::Markov(mk) => {
                if mk.kernels.kernels.len() != a || mk.u.len() != a {
                    return Err(Error::Config(format!("kernel and observable lists must have {a} entries")));
                }
                let kf = &mk.kernels;
                if !(kf.alpha > 0.0 && kf.alpha <= 1.0) {
                    return Err(Error::Config("Doeblin alpha must lie in (0, 1]".into()));
                }
                let grid = match kf.quadrature {
                    Quadrature::Trapezoid => Grid::circle(kf.nodes)?,
                    Quadrature::GaussLegendre => Grid::gauss_legendre(kf.nodes)?,
                };
                let x = grid.nodes();
                let w = grid.weights();
                let n = grid.len();
                let mut kernels = Vec::with_capacity(a);
                for (s, ker) in kf.kernels.iter().enumerate() {
                    let mut m = vec![0.0; n * n];
                    for i in 0..n {
                        let mut row = 0.0;
                        for j in 0..n {
                            let r = ker.eval(x[i], x[j]);
                            if r < kf.alpha - 1e-15 || r > 1.0 / kf.alpha + 1e-15 {
                                return Err(Error::Config(format!(
                                    "kernel {s} violates the Doeblin bounds: r = {r} with alpha = {}",
                                    kf.alpha
                                )));
                            }
                            m[i * n + j] = r * w[j];
                            row += r * w[j];
                        }
                        for j in 0..n {
                            m[i * n + j] /= row;
                        }
                    }
                    kernels.push(m);
                }
                let u = mk.u.iter().map(|f| x.iter().map(|&y| f.eval(y)).collect()).collect();
                Ok(Arc::new(Model {
                    env,
                    fibers,
                    grid,
                    pre: Precomp::Markov { kernels, u },
                }))
            }
        }
    }

    pub fn env(&self) -> &EnvModel {
        &self.env
    }

    pub fn fibers(&self) -> &FiberModel {
        &self.fibers
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn direction(&self) -> Direction {
        match self.fibers {
            FiberModel::Transfer(_) => Direction::Forward,
            FiberModel::Markov(_) => Direction::Backward,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.env.alphabet_size()
    }

    /// True when the zero-parameter operators fix the constant function by
    /// construction (affine maps with -ln m, row-normalized kernels).
    pub fn is_normalized(&self) -> bool {
        match &self.fibers {
            FiberModel::Transfer(t) => {
                t.maps.maps.iter().all(|m| m.eps == 0.0)
                    && t.obs.potential.iter().all(|p| matches!(p, Potential::Geometric))
            }
            FiberModel::Markov(_) => true,
        }
    }

    /// Observable of each symbol.
    pub fn observables(&self) -> &[ScalarField] {
        match &self.fibers {
            FiberModel::Transfer(t) => &t.obs.u,
            FiberModel::Markov(m) => &m.u,
        }
    }

    /// Number of distinct step operators.
    fn key_count(&self) -> usize {
        match self.pre {
            Precomp::Transfer(_) => self.alphabet_size(),
            Precomp::Markov { .. } => self.alphabet_size() * self.alphabet_size(),
        }
    }

    /// Dense step operator for key (transfer: symbol; Markov: kernel * A + observable).
    pub fn step_op(&self, key: usize, z: C64) -> DenseOp {
        let n = self.grid.len();
        match &self.pre {
            Precomp::Transfer(per_sym) => {
                let mut op = DenseOp::zeros(n, n);
                for br in &per_sym[key] {
                    for k in 0..n {
                        let f = (z * br.u[k]).exp();
                        let src = &br.b[k * n..(k + 1) * n];
                        for (o, b) in op.row_mut(k).iter_mut().zip(src) {
                            *o += f * b;
                        }
                    }
                }
                op
            }
            Precomp::Markov { kernels, u } => {
                let a = self.alphabet_size();
                let (ks, us) = (key / a, key % a);
                let e: Vec<C64> = u[us].iter().map(|&v| (z * v).exp()).collect();
                let k = &kernels[ks];
                DenseOp::from_fn(n, n, |i, j| e[j] * k[i * n + j])
            }
        }
    }
}

fn transfer_branches(grid: &Grid, maps: &MapFamily, obs: &ObservablePair, s: usize) -> Vec<Branch> {
    let n = grid.len();
    let map = maps.maps[s];
    let m = map.slope as usize;
    let mut out: Vec<Branch> = (0..m)
        .map(|_| Branch {
            u: vec![0.0; n],
            b: vec![0.0; n * n],
        })
        .collect();
    for (k, &x) in grid.nodes().iter().enumerate() {
        for (i, y) in inverse_branches(maps, s, x) {
            let w = obs.phi(&map, s, y).exp();
            out[i].u[k] = obs.u[s].eval(y);
            let row = grid.interp_row(y);
            for j in 0..n {
                out[i].b[k * n + j] = w * row[j];
            }
        }
    }
    out
}

/// Conjugation data h(0) and lambda(0) making the zero-parameter cocycle
/// fix the constant function.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub lo: i64,
    /// h(0) on fibers lo..=lo + h0.len() - 1
    pub h0: Vec<FiberField>,
    /// lambda(0) on steps lo..lo + lam0.len()
    pub lam0: Vec<f64>,
}

impl Normalization {
    fn fiber_index(&self, k: i64) -> Result<usize> {
        let i = k - self.lo;
        if i < 0 || i >= self.h0.len() as i64 {
            return Err(Error::OutOfWindow {
                what: "normalized fiber",
                needed: k,
                lo: self.lo,
                hi: self.lo + self.h0.len() as i64 - 1,
            });
        }
        Ok(i as usize)
    }

    pub fn h0_at(&self, k: i64, y: f64) -> Result<f64> {
        Ok(self.h0[self.fiber_index(k)?].eval(y).re)
    }

    fn scales(&self, k: i64) -> Result<(Vec<f64>, Vec<f64>)> {
        let i = self.fiber_index(k)?;
        let next = self.fiber_index(k + 1)?;
        let pre: Vec<f64> = self.h0[i].values().iter().map(|z| z.re).collect();
        let post: Vec<f64> = self.h0[next]
            .values()
            .iter()
            .map(|z| 1.0 / (self.lam0[i] * z.re))
            .collect();
        Ok((pre, post))
    }
}

/// A model bound to an environment path, optionally conjugated by a
/// normalization.
#[derive(Debug, Clone)]
pub struct Cocycle {
    model: Arc<Model>,
    path: EnvPath,
    norm: Option<Arc<Normalization>>,
}

impl Cocycle {
    pub fn new(model: Arc<Model>, path: EnvPath) -> Self {
        Cocycle { model, path, norm: None }
    }

    pub fn with_normalization(&self, norm: Normalization) -> Self {
        Cocycle {
            model: self.model.clone(),
            path: self.path.clone(),
            norm: Some(Arc::new(norm)),
        }
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn path(&self) -> &EnvPath {
        &self.path
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.model.grid()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.norm.as_deref()
    }

    /// Steps k with lo <= k < hi are available; fibers lo..=hi.
    pub fn step_bounds(&self) -> (i64, i64) {
        let (plo, phi) = self.path.bounds();
        let (lo, hi) = match self.model.direction() {
            Direction::Forward => (plo, phi),
            Direction::Backward => (-phi, -plo),
        };
        match &self.norm {
            None => (lo, hi),
            Some(nz) => (lo.max(nz.lo), hi.min(nz.lo + nz.lam0.len() as i64)),
        }
    }

    fn check_step(&self, k: i64) -> Result<()> {
        let (lo, hi) = self.step_bounds();
        if k < lo || k >= hi {
            return Err(Error::OutOfWindow {
                what: "cocycle step",
                needed: k,
                lo,
                hi: hi - 1,
            });
        }
        Ok(())
    }

    /// Symbol whose observable lives on fiber k.
    pub fn observable_symbol(&self, k: i64) -> Result<u32> {
        match self.model.direction() {
            Direction::Forward => self.path.symbol(k),
            Direction::Backward => self.path.symbol(-k),
        }
    }

    /// Symbol whose kernel drives step k (Markov cocycles).
    pub fn kernel_symbol(&self, k: i64) -> Result<u32> {
        match self.model.direction() {
            Direction::Forward => self.path.symbol(k),
            Direction::Backward => self.path.symbol(-k - 1),
        }
    }

    fn step_key(&self, k: i64) -> Result<usize> {
        self.check_step(k)?;
        Ok(match self.model.direction() {
            Direction::Forward => self.path.symbol(k)? as usize,
            Direction::Backward => {
                let a = self.model.alphabet_size();
                self.kernel_symbol(k)? as usize * a + self.observable_symbol(k)? as usize
            }
        })
    }

    /// Cocycle of theta^j omega, i.e. fiber j becomes fiber 0.
    pub fn shifted(&self, j: i64) -> Result<Cocycle> {
        let path = match self.model.direction() {
            Direction::Forward => shift(&self.path, j)?,
            Direction::Backward => shift(&self.path, -j)?,
        };
        let norm = self.norm.as_ref().map(|nz| {
            let mut m = (**nz).clone();
            m.lo -= j;
            Arc::new(m)
        });
        Ok(Cocycle {
            model: self.model.clone(),
            path,
            norm,
        })
    }

    /// Operators at parameter z, one dense matrix per distinct step key.
    pub fn at(&self, z: C64) -> Frozen<'_> {
        let ops = (0..self.model.key_count()).map(|key| self.model.step_op(key, z)).collect();
        Frozen { cocycle: self, z, ops }
    }
}

pub struct Frozen<'a> {
    cocycle: &'a Cocycle,
    z: C64,
    ops: Vec<DenseOp>,
}

impl<'a> Frozen<'a> {
    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn cocycle(&self) -> &Cocycle {
        self.cocycle
    }

    pub fn apply(&self, k: i64, g: &[C64]) -> Result<Vec<C64>> {
        let key = self.cocycle.step_key(k)?;
        let op = &self.ops[key];
        match &self.cocycle.norm {
            None => Ok(op.apply(g)),
            Some(nz) => {
                let (pre, post) = nz.scales(k)?;
                let h: Vec<C64> = g.iter().zip(&pre).map(|(a, b)| a * b).collect();
                let mut out = op.apply(&h);
                out.iter_mut().zip(&post).for_each(|(a, b)| *a *= b);
                Ok(out)
            }
        }
    }

    /// The dual action on grid weights: w on fiber k + 1 to fiber k.
    pub fn apply_t(&self, k: i64, w: &[C64]) -> Result<Vec<C64>> {
        let key = self.cocycle.step_key(k)?;
        let op = &self.ops[key];
        match &self.cocycle.norm {
            None => Ok(op.apply_t(w)),
            Some(nz) => {
                let (pre, post) = nz.scales(k)?;
                let v: Vec<C64> = w.iter().zip(&post).map(|(a, b)| a * b).collect();
                let mut out = op.apply_t(&v);
                out.iter_mut().zip(&pre).for_each(|(a, b)| *a *= b);
                Ok(out)
            }
        }
    }

    /// Dense matrix of step k including any normalization.
    pub fn dense_step(&self, k: i64) -> Result<DenseOp> {
        let key = self.cocycle.step_key(k)?;
        let op = &self.ops[key];
        match &self.cocycle.norm {
            None => Ok(op.clone()),
            Some(nz) => {
                let (pre, post) = nz.scales(k)?;
                Ok(DenseOp::from_fn(op.rows(), op.cols(), |i, j| op.get(i, j) * pre[j] * post[i]))
            }
        }
    }
}

/// One application of L_z for a single map symbol.
pub fn transfer_apply(model: &Model, symbol: usize, z: C64, g: &FiberField) -> Result<FiberField> {
    if !matches!(model.fibers, FiberModel::Transfer(_)) {
        return Err(Error::Config("transfer_apply needs a transfer model".into()));
    }
    Ok(FiberField::new(model.grid.clone(), model.step_op(symbol, z).apply(g.values())))
}

/// One application of R_z with kernel symbol `ks` and observable symbol `us`.
pub fn markov_apply(model: &Model, ks: usize, us: usize, z: C64, g: &FiberField) -> Result<FiberField> {
    if !matches!(model.fibers, FiberModel::Markov(_)) {
        return Err(Error::Config("markov_apply needs a Markov model".into()));
    }
    let key = ks * model.alphabet_size() + us;
    Ok(FiberField::new(model.grid.clone(), model.step_op(key, z).apply(g.values())))
}

/// Applies n steps from fiber `start`, rescaling to unit sup each step.
/// The true iterate is exp(log_scale) * field.
pub fn cocycle_apply(fz: &Frozen, start: i64, n: usize, g: &[C64]) -> Result<(Vec<C64>, C64)> {
    let s0 = sup(g);
    if !(s0 > 0.0) {
        return Err(Error::Degenerate("zero input field".into()));
    }
    let mut v: Vec<C64> = g.iter().map(|x| x / s0).collect();
    let mut log_scale = C64::new(s0.ln(), 0.0);
    for k in start..start + n as i64 {
        v = fz.apply(k, &v)?;
        let s = sup(&v);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Degenerate(format!("field vanished at step {k}")));
        }
        v.iter_mut().for_each(|x| *x /= s);
        log_scale += s.ln();
    }
    Ok((v, log_scale))
}

/// Fixed probe set: constant, low trig modes, the highest power-of-two
/// mode and one random Lipschitz field.
pub fn probes(grid: &Grid, seed: u64) -> Vec<Vec<C64>> {
    let x = grid.nodes();
    let n = grid.len();
    let mut out = vec![vec![C64::new(1.0, 0.0); n]];
    let mut modes: Vec<usize> = vec![1, 2, 3];
    let mut k = 4;
    while k <= n / 2 {
        modes.push(k);
        k *= 2;
    }
    for &k in &modes {
        let kf = k as f64;
        match grid.kind() {
            GridKind::Circle => {
                out.push(x.iter().map(|&t| C64::new((2.0 * PI * kf * t).cos(), 0.0)).collect());
                if 2 * k < n {
                    out.push(x.iter().map(|&t| C64::new((2.0 * PI * kf * t).sin(), 0.0)).collect());
                }
            }
            GridKind::GaussLegendre => {
                out.push(x.iter().map(|&t| C64::new((PI * kf * t).cos(), 0.0)).collect());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 8;
    let a: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    out.push(
        x.iter()
            .map(|&t| {
                let mut s = 0.0;
                for j in 0..m {
                    let f = 2.0 * PI * (j + 1) as f64 * t;
                    let d = ((j + 1) * (j + 1)) as f64;
                    s += (a[2 * j] * f.cos() + a[2 * j + 1] * f.sin()) / d;
                }
                C64::new(s, 0.0)
            })
            .collect(),
    );
    out
}

/// Probe-basis estimate of ||A_{it}^{omega,n}|| for each t.
pub fn norm_estimate(cocycle: &Cocycle, start: i64, n: usize, ts: &[f64], spec: NormSpec) -> Result<Vec<f64>> {
    let grid = cocycle.grid().clone();
    let pr = probes(&grid, 0x5eed);
    ts.iter()
        .map(|&t| {
            let fz = cocycle.at(C64::new(0.0, t));
            let mut best: f64 = 0.0;
            for g in &pr {
                let (v, ls) = cocycle_apply(&fz, start, n, g)?;
                let r = (ls.re).exp() * fiber_norm(&grid, &v, spec) / fiber_norm(&grid, g, spec);
                best = best.max(r);
            }
            Ok(best)
        })
        .collect()
}

/// Dense product A^{start + n - 1} ... A^{start} at parameter z.
pub fn dense_cocycle(fz: &Frozen, start: i64, n: usize) -> Result<DenseOp> {
    let size = fz.cocycle().grid().len();
    let mut acc = DenseOp::from_fn(size, size, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for k in start..start + n as i64 {
        acc = fz.dense_step(k)?.matmul(&acc);
    }
    Ok(acc)
}
