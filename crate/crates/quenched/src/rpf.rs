//! Random RPF triplets, pressure branches and contraction estimates.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{dot, fiber_norm, sup, DenseOp, FiberField, NormSpec};
use crate::operators::{probes, Cocycle, Frozen, Normalization};
use crate::report::num;
use crate::stats::linear_fit;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn lebesgue(fz: &Frozen) -> Vec<C64> {
    fz.cocycle().grid().weights().iter().map(|&w| c(w)).collect()
}

/// nu on fibers lo..=hi and lambda on steps lo..hi from one backward sweep.
#[derive(Debug, Clone)]
pub struct NuSweep {
    pub lo: i64,
    pub weights: Vec<Vec<C64>>,
    pub lambda: Vec<C64>,
}

impl NuSweep {
    pub fn nu(&self, k: i64) -> &[C64] {
        &self.weights[(k - self.lo) as usize]
    }

    pub fn lambda_at(&self, k: i64) -> C64 {
        self.lambda[(k - self.lo) as usize]
    }
}

/// Backward transposed iteration from fiber hi + depth, normalized so
/// nu(1) = 1 at every fiber. The normalizing factors are the lambda_k.
pub fn nu_sweep(fz: &Frozen, lo: i64, hi: i64, depth: usize) -> Result<NuSweep> {
    let top = hi + depth as i64;
    let mut w = lebesgue(fz);
    let mut weights = vec![Vec::new(); (hi - lo + 1) as usize];
    let mut lambda = vec![C64::new(0.0, 0.0); (hi - lo) as usize];
    if top == hi {
        weights[(hi - lo) as usize] = w.clone();
    }
    for k in (lo..top).rev() {
        let mut v = fz.apply_t(k, &w)?;
        let s: C64 = v.iter().sum();
        let mass: f64 = v.iter().map(|x| x.norm()).sum();
        if !(s.norm() > 1e-13 * mass) || !s.is_finite() {
            return Err(Error::Degenerate(format!("dual sweep lost its mass at step {k}")));
        }
        v.iter_mut().for_each(|x| *x /= s);
        w = v;
        if k <= hi {
            weights[(k - lo) as usize] = w.clone();
        }
        if k < hi {
            lambda[(k - lo) as usize] = s;
        }
    }
    Ok(NuSweep { lo, weights, lambda })
}

/// Forward iterates of 1 from fiber lo - depth, sup-normalized, recorded on
/// fibers lo..=hi (proportional to h_k).
pub fn h_sweep(fz: &Frozen, lo: i64, hi: i64, depth: usize) -> Result<Vec<Vec<C64>>> {
    let n = fz.cocycle().grid().len();
    let mut g = vec![c(1.0); n];
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    let start = lo - depth as i64;
    if depth == 0 {
        out.push(g.clone());
    }
    for k in start..hi {
        g = fz.apply(k, &g)?;
        let s = sup(&g);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Degenerate(format!("forward iterate vanished at step {k}")));
        }
        g.iter_mut().for_each(|x| *x /= s);
        if k + 1 >= lo {
            out.push(g.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub values: Vec<C64>,
    pub steps: usize,
    pub increments: Vec<f64>,
}

fn project(v: &[C64], w: &[C64]) -> Vec<C64> {
    let m = dot(w, v);
    v.iter().map(|x| x / m).collect()
}

fn single_symbol(cocycle: &Cocycle) -> bool {
    cocycle.model().alphabet_size() == 1 && cocycle.normalization().is_none()
}

/// h at `fiber` by forward iteration from fiber - depth. Two chains started
/// one fiber apart are compared after each step; on a single-symbol
/// environment iteration stops as soon as they agree to `tol`.
pub fn solve_h(cocycle: &Cocycle, fiber: i64, z: C64, depth: usize, tol: f64) -> Result<SolveReport> {
    let fz = cocycle.at(z);
    let leb = lebesgue(&fz);
    let n = leb.len();
    let start = fiber - depth as i64;
    let stationary = single_symbol(cocycle);
    let mut a = fz.apply(start, &vec![c(1.0); n])?;
    let mut b = vec![c(1.0); n];
    let mut increments = Vec::new();
    let mut steps = 1;
    for k in start + 1..=fiber {
        let pa = project(&a, &leb);
        let pb = project(&b, &leb);
        let inc = sup(&pa.iter().zip(&pb).map(|(x, y)| x - y).collect::<Vec<_>>());
        increments.push(inc);
        if stationary && inc < tol {
            return Ok(SolveReport { values: pa, steps, increments });
        }
        if k == fiber {
            break;
        }
        a = fz.apply(k, &pa)?;
        b = fz.apply(k, &pb)?;
        steps += 1;
    }
    let last = *increments.last().unwrap_or(&0.0);
    if !(last < tol) {
        return Err(Error::Convergence { depth, last_increment: last });
    }
    Ok(SolveReport {
        values: project(&a, &leb),
        steps,
        increments,
    })
}

/// nu at `fiber` by transposed iteration from fiber + depth, nu(1) = 1.
pub fn solve_nu(cocycle: &Cocycle, fiber: i64, z: C64, depth: usize, tol: f64) -> Result<SolveReport> {
    let fz = cocycle.at(z);
    let leb = lebesgue(&fz);
    let top = fiber + depth as i64;
    let stationary = single_symbol(cocycle);
    let norm1 = |v: Vec<C64>| -> Result<Vec<C64>> {
        let s: C64 = v.iter().sum();
        if !(s.norm() > 0.0) {
            return Err(Error::Degenerate("dual iterate has zero total mass".into()));
        }
        Ok(v.into_iter().map(|x| x / s).collect())
    };
    let mut a = norm1(fz.apply_t(top - 1, &leb)?)?;
    let mut b = leb.clone();
    let mut increments = Vec::new();
    let mut steps = 1;
    let mut k = top - 1;
    loop {
        let inc = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).sum::<f64>();
        increments.push(inc);
        if stationary && inc < tol {
            return Ok(SolveReport { values: a, steps, increments });
        }
        if k == fiber {
            break;
        }
        k -= 1;
        a = norm1(fz.apply_t(k, &a)?)?;
        b = norm1(fz.apply_t(k, &b)?)?;
        steps += 1;
    }
    let last = *increments.last().unwrap_or(&0.0);
    if !(last < tol) {
        return Err(Error::Convergence { depth, last_increment: last });
    }
    Ok(SolveReport { values: a, steps, increments })
}

#[derive(Debug, Clone)]
pub struct RpfTriplet {
    pub z: C64,
    pub fiber: i64,
    pub lambda: C64,
    /// principal log of lambda; branch tracking lives in `pressure`
    pub log_lambda: C64,
    pub h: FiberField,
    pub nu: Vec<C64>,
    pub nu_next: Vec<C64>,
    pub residuals: Option<[f64; 3]>,
}

/// Triplet on `fiber`: nu there and on the next fiber, h with nu(h) = 1,
/// lambda = nu_next(A 1).
pub fn solve_triplet(cocycle: &Cocycle, fiber: i64, z: C64, depth: usize, tol: f64) -> Result<RpfTriplet> {
    let nu = solve_nu(cocycle, fiber, z, depth, tol)?.values;
    let nu_next = solve_nu(cocycle, fiber + 1, z, depth, tol)?.values;
    let h = solve_h(cocycle, fiber, z, depth, tol)?.values;
    let m = dot(&nu, &h);
    if !(m.norm() > 1e-300) {
        return Err(Error::Degenerate("nu(h) vanished".into()));
    }
    let h: Vec<C64> = h.iter().map(|x| x / m).collect();
    let fz = cocycle.at(z);
    let n = h.len();
    let a1 = fz.apply(fiber, &vec![c(1.0); n])?;
    let lambda = dot(&nu_next, &a1);
    Ok(RpfTriplet {
        z,
        fiber,
        lambda,
        log_lambda: lambda.ln(),
        h: FiberField::new(cocycle.grid().clone(), h),
        nu,
        nu_next,
        residuals: None,
    })
}

pub fn lambda_of(cocycle: &Cocycle, fiber: i64, z: C64, depth: usize, tol: f64) -> Result<C64> {
    let nu_next = solve_nu(cocycle, fiber + 1, z, depth, tol)?.values;
    let fz = cocycle.at(z);
    let n = nu_next.len();
    Ok(dot(&nu_next, &fz.apply(fiber, &vec![c(1.0); n])?))
}

/// Continuous logarithm of values along a curve, starting from the
/// principal log of the first value.
pub fn track_branch(values: &[C64]) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = match values.first() {
        Some(v) => v.ln(),
        None => return Ok(out),
    };
    out.push(prev);
    for i in 1..values.len() {
        let step = (values[i] / values[i - 1]).ln();
        if step.im.abs() >= FRAC_PI_2 {
            return Err(Error::Branch { index: i, step: step.im });
        }
        prev += step;
        out.push(prev);
    }
    Ok(out)
}

/// Pi(z) along a curve from 0 on one fiber.
pub fn pressure(cocycle: &Cocycle, fiber: i64, zs: &[C64], depth: usize, tol: f64) -> Result<Vec<C64>> {
    if zs.first().map(|z| z.norm() != 0.0).unwrap_or(true) {
        return Err(Error::Domain("pressure curve must start at z = 0".into()));
    }
    let lam: Vec<C64> = zs
        .iter()
        .map(|&z| lambda_of(cocycle, fiber, z, depth, tol))
        .collect::<Result<_>>()?;
    let mut out = track_branch(&lam)?;
    let p0 = out[0];
    out.iter_mut().for_each(|v| *v -= p0);
    Ok(out)
}

/// h-equation sup residual, nu-equation residual over probes, |nu(h) - 1|.
pub fn verify_rpf_identities(cocycle: &Cocycle, t0: &RpfTriplet, t1: &RpfTriplet) -> Result<[f64; 3]> {
    if t1.fiber != t0.fiber + 1 || t0.z != t1.z {
        return Err(Error::Domain("triplets must sit on consecutive fibers at one z".into()));
    }
    let fz = cocycle.at(t0.z);
    let ah = fz.apply(t0.fiber, t0.h.values())?;
    let r_h = sup(&ah
        .iter()
        .zip(t1.h.values())
        .map(|(a, b)| a - t0.lambda * b)
        .collect::<Vec<_>>())
        / sup(t1.h.values()).max(1e-300);
    let mut r_nu: f64 = 0.0;
    for g in probes(cocycle.grid(), 11) {
        let lhs = dot(&t1.nu, &fz.apply(t0.fiber, &g)?);
        let rhs = t0.lambda * dot(&t0.nu, &g);
        r_nu = r_nu.max((lhs - rhs).norm() / sup(&g));
    }
    let r_norm = (dot(&t0.nu, t0.h.values()) - 1.0).norm();
    Ok([r_h, r_nu, r_norm])
}

#[derive(Debug, Clone)]
pub struct ContractionEstimate {
    pub c: f64,
    pub delta: f64,
    pub r2: f64,
    /// residual max over probes for n = 0..=n_max
    pub residuals: Vec<f64>,
    pub fit_range: (usize, usize),
    pub collapsed: bool,
    pub valid: bool,
}

/// Smallest positive value, reported when the residual collapses at once.
pub const DELTA_COLLAPSED: f64 = f64::MIN_POSITIVE;

/// Fits max_g ||lambda^{-n} A^n g - nu(g) h|| / ||g|| ~ C delta^n over
/// n = 1..=n_max, keeping points above the roundoff floor.
pub fn estimate_contraction(
    cocycle: &Cocycle,
    z: C64,
    start: i64,
    n_max: usize,
    depth: usize,
    spec: NormSpec,
) -> Result<ContractionEstimate> {
    if n_max < 5 {
        return Err(Error::Domain("contraction fit needs at least 5 values of n".into()));
    }
    let fz = cocycle.at(z);
    let grid = cocycle.grid().clone();
    let end = start + n_max as i64;
    let sweep = nu_sweep(&fz, start, end, depth)?;
    let hs = h_sweep(&fz, start, end, depth)?;
    let hs: Vec<Vec<C64>> = hs
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            let m = dot(sweep.nu(start + i as i64), &h);
            h.iter().map(|x| x / m).collect()
        })
        .collect();
    let pr = probes(&grid, 17);
    let mut residuals = vec![0.0f64; n_max + 1];
    for g in &pr {
        let gn = fiber_norm(&grid, g, spec);
        let coef = dot(sweep.nu(start), g);
        let mut v = g.clone();
        for n in 0..=n_max {
            if n > 0 {
                let k = start + n as i64 - 1;
                v = fz.apply(k, &v)?;
                let l = sweep.lambda_at(k);
                v.iter_mut().for_each(|x| *x /= l);
            }
            let d: Vec<C64> = v.iter().zip(&hs[n]).map(|(a, b)| a - coef * b).collect();
            residuals[n] = residuals[n].max(fiber_norm(&grid, &d, spec) / gn);
        }
    }
    let floor = 1e-11;
    let mut last = 0;
    for n in 1..=n_max {
        if residuals[n] > floor {
            last = n;
        } else {
            break;
        }
    }
    if last < 3 {
        return Ok(ContractionEstimate {
            c: residuals[0],
            delta: DELTA_COLLAPSED,
            r2: f64::NAN,
            residuals,
            fit_range: (1, last),
            collapsed: true,
            valid: true,
        });
    }
    let xs: Vec<f64> = (1..=last).map(|n| n as f64).collect();
    let ys: Vec<f64> = (1..=last).map(|n| residuals[n].ln()).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    let delta = b.exp();
    Ok(ContractionEstimate {
        c: a.exp(),
        delta,
        r2,
        residuals,
        fit_range: (1, last),
        collapsed: false,
        valid: delta < 1.0,
    })
}

/// depth = ceil(ln tol / ln delta) from a short contraction pre-pass.
pub fn auto_depth(cocycle: &Cocycle, fiber: i64, z: C64, tol: f64, max_depth: usize) -> Result<usize> {
    let est = estimate_contraction(cocycle, z, fiber, 12, 40, NormSpec::default())?;
    if est.collapsed {
        return Ok(4);
    }
    let d = est.delta.clamp(1e-3, 0.99);
    Ok(((tol.ln() / d.ln()).ceil() as usize + 2).clamp(4, max_depth))
}

/// Normalizes the cocycle on fibers lo..=hi using z = 0 triplets.
pub fn normalize_operator(cocycle: &Cocycle, lo: i64, hi: i64, depth: usize) -> Result<Cocycle> {
    let fz = cocycle.at(C64::new(0.0, 0.0));
    let sweep = nu_sweep(&fz, lo, hi, depth)?;
    let hs = h_sweep(&fz, lo, hi, depth)?;
    let grid = cocycle.grid().clone();
    let mut h0 = Vec::with_capacity(hs.len());
    for (i, h) in hs.into_iter().enumerate() {
        let m = dot(sweep.nu(lo + i as i64), &h);
        let vals: Vec<C64> = h.iter().map(|x| x / m).collect();
        if vals.iter().any(|v| !(v.re > 0.0) || v.im.abs() > 1e-10 * v.re.abs().max(1.0)) {
            return Err(Error::Sanity(format!("nonpositive h(0) sample on fiber {}", lo + i as i64)));
        }
        h0.push(FiberField::new(grid.clone(), vals.iter().map(|v| c(v.re)).collect()));
    }
    let lam0: Vec<f64> = sweep.lambda.iter().map(|l| l.re).collect();
    if lam0.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Sanity("nonpositive lambda(0)".into()));
    }
    Ok(cocycle.with_normalization(Normalization { lo, h0, lam0 }))
}

/// Gibbs weights mu_k = h_k(0) nu_k(0) on fibers lo..=hi.
pub fn gibbs_weights(cocycle: &Cocycle, lo: i64, hi: i64, depth: usize) -> Result<Vec<Vec<f64>>> {
    let fz = cocycle.at(C64::new(0.0, 0.0));
    let sweep = nu_sweep(&fz, lo, hi, depth)?;
    let hs = h_sweep(&fz, lo, hi, depth)?;
    Ok(hs
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let nu = sweep.nu(lo + i as i64);
            let m = dot(nu, h);
            nu.iter().zip(h).map(|(a, b)| (a * b / m).re).collect()
        })
        .collect())
}

type CacheKey = (u64, i64, u64, u64, usize, usize);

/// Shared triplet store keyed by (seed, fiber, z, N, depth).
#[derive(Default)]
pub struct TripletCache {
    inner: RwLock<HashMap<CacheKey, Arc<RpfTriplet>>>,
}

impl TripletCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_solve(&self, cocycle: &Cocycle, fiber: i64, z: C64, depth: usize, tol: f64) -> Result<Arc<RpfTriplet>> {
        let key = (
            cocycle.path().seed(),
            fiber,
            z.re.to_bits(),
            z.im.to_bits(),
            cocycle.grid().len(),
            depth,
        );
        if let Some(t) = self.inner.read().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(solve_triplet(cocycle, fiber, z, depth, tol)?);
        self.inner.write().unwrap().insert(key, t.clone());
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn write_triplet_csv<W: Write>(mut w: W, triplets: &[RpfTriplet]) -> std::io::Result<()> {
    writeln!(w, "fiber,z_re,z_im,kind,index,x,re,im")?;
    for t in triplets {
        let x = t.h.grid().nodes();
        let head = format!("{},{},{}", t.fiber, num(t.z.re), num(t.z.im));
        writeln!(w, "{head},log_lambda,0,0,{},{}", num(t.log_lambda.re), num(t.log_lambda.im))?;
        for (j, v) in t.h.values().iter().enumerate() {
            writeln!(w, "{head},h,{j},{},{},{}", num(x[j]), num(v.re), num(v.im))?;
        }
        for (j, v) in t.nu.iter().enumerate() {
            writeln!(w, "{head},nu,{j},{},{},{}", num(x[j]), num(v.re), num(v.im))?;
        }
    }
    Ok(())
}

/// Eigenvalues of a dense operator, sorted by decreasing modulus.
pub fn dense_eigenvalues(op: &DenseOp) -> Vec<C64> {
    let m = op.to_nalgebra();
    let mut ev: Vec<C64> = m.eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_else(|| {
        m.schur().eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_default()
    });
    ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    ev
}

/// Leading eigenpair by inverse iteration seeded at the leading eigenvalue.
pub fn dense_leading_eigenpair(op: &DenseOp) -> (C64, Vec<C64>) {
    let ev = dense_eigenvalues(op);
    let lam = ev[0];
    let n = op.rows();
    let m = op.to_nalgebra();
    let shift = lam * (1.0 + 1e-10);
    let a = &m - DMatrix::<C64>::identity(n, n) * shift;
    let lu = a.lu();
    let mut x = DVector::from_element(n, c(1.0));
    for _ in 0..6 {
        x = lu.solve(&x).unwrap_or(x);
        let s = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        x /= c(s);
    }
    let y = &m * &x;
    let num: C64 = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
    let den: C64 = x.iter().map(|a| a.conj() * a).sum();
    (num / den, x.iter().cloned().collect())
}
