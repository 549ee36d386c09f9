//! Edgeworth expansions from pressure and W jets, characteristic-function
//! CDFs, distribution distances and the rate experiments built on them.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{dot, Grid, NormSpec};
use crate::moments::{jet_at_zero, JetOptions, PressureJet};
use crate::operators::{cocycle_apply, norm_estimate, Cocycle};
use crate::rpf::gibbs_weights;
use crate::series::{poly_eval, FormalSeries, Poly};
use crate::stats::{factorial, median, normal_cdf, power_fit};

pub const MAX_ORDER: usize = 3;

/// Probabilists' Hermite polynomial He_m as coefficients in x.
pub fn hermite(m: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..m {
        // He_{k+1} = x He_k - k He_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// CDF-side image of (it)^j e^{-v t^2 / 2}: the function G with
/// int e^{its} dG(s) = (it)^j e^{-vt^2/2}, written as
/// (2 pi)^{-1/2} p(s) e^{-s^2/(2v)}. Returns p as coefficients in s.
pub fn monomial_image(j: usize, v: f64) -> Vec<f64> {
    if j == 0 {
        return vec![0.0];
    }
    let he = hermite(j - 1);
    let sv = v.sqrt();
    he.iter()
        .enumerate()
        .map(|(i, c)| -c * v.powf(-(j as f64) / 2.0) / sv.powi(i as i32))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeworthModel {
    pub d: usize,
    pub n: usize,
    pub variance: f64,
    /// P_k as coefficients in s, k = 1..=d
    pub polys: Vec<Vec<f64>>,
    /// A_k as coefficients in it, k = 1..=d
    pub frequency: Vec<Poly>,
}

impl EdgeworthModel {
    /// Coefficient of s^j in P_k.
    pub fn coefficient(&self, k: usize, j: usize) -> f64 {
        self.polys[k - 1].get(j).cloned().unwrap_or(0.0)
    }

    /// Characteristic-function side e^{-vt^2/2}(1 + sum n^{-k/2} A_k(it)).
    pub fn characteristic(&self, t: f64) -> C64 {
        let x = C64::new(0.0, t);
        let mut s = C64::new(1.0, 0.0);
        for (k, a) in self.frequency.iter().enumerate() {
            s += poly_eval(a, x) * (self.n as f64).powf(-((k + 1) as f64) / 2.0);
        }
        s * (-0.5 * self.variance * t * t).exp()
    }
}

/// Order-d expansion for S_n / sqrt(n) from averaged pressure jets
/// avg[l] = mean Pi^{(l)}(0) and the ln W jet at the end fiber.
pub fn build_expansion(avg: &[C64], lnw: &[C64], n: usize, d: usize) -> Result<EdgeworthModel> {
    if d == 0 || d > MAX_ORDER {
        return Err(Error::Order(format!("expansion order must be in 1..={MAX_ORDER}, got {d}")));
    }
    if avg.len() < d + 3 || lnw.len() < d + 1 {
        return Err(Error::Order(format!("order {d} needs pressure jets to {} and ln W jets to {d}", d + 2)));
    }
    let v = avg[2].re;
    if !(v > 1e-12) {
        return Err(Error::Degenerate(format!("variance {v:e} is not positive")));
    }
    if avg[1].norm() > 1e-8 * v.max(1.0) {
        return Err(Error::Domain(format!("observable is not centered: mean Pi'(0) = {:e}", avg[1].re)));
    }
    let mut terms: Vec<Poly> = vec![vec![C64::new(0.0, 0.0)]];
    for k in 1..=d {
        let mut b = vec![C64::new(0.0, 0.0); k + 3];
        b[k + 2] = avg[k + 2] / factorial(k + 2);
        b[k] += lnw[k] / factorial(k);
        terms.push(b);
    }
    let a = FormalSeries::from_terms(d, terms).exp()?;
    let mut polys = Vec::with_capacity(d);
    let mut frequency = Vec::with_capacity(d);
    for k in 1..=d {
        let ak = a.term(k).clone();
        let mut p = vec![0.0];
        for (j, c) in ak.iter().enumerate() {
            let img = monomial_image(j, v);
            if p.len() < img.len() {
                p.resize(img.len(), 0.0);
            }
            for (i, x) in img.iter().enumerate() {
                p[i] += c.re * x;
            }
        }
        polys.push(p);
        frequency.push(ak);
    }
    Ok(EdgeworthModel {
        d,
        n,
        variance: v,
        polys,
        frequency,
    })
}

fn poly_real(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Gaussian CDF with variance Pi_{n,2} plus the polynomial corrections
/// of orders 1..=upto (0 gives the plain Gaussian).
pub fn evaluate_expansion(model: &EdgeworthModel, s: f64, upto: usize) -> f64 {
    let v = model.variance;
    let mut f = normal_cdf(s / v.sqrt());
    let g = (-s * s / (2.0 * v)).exp() / (2.0 * PI).sqrt();
    for k in 1..=upto.min(model.d) {
        f += (model.n as f64).powf(-(k as f64) / 2.0) * poly_real(&model.polys[k - 1], s) * g;
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
}

impl CdfCurve {
    pub fn from_fn(s: &[f64], f: impl Fn(f64) -> f64) -> Self {
        CdfCurve {
            s: s.to_vec(),
            f: s.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Clip to [0, 1] and make non-decreasing; returns the fraction of
    /// points that changed.
    pub fn clipped(&self) -> (CdfCurve, f64) {
        let mut out = Vec::with_capacity(self.f.len());
        let mut changed = 0;
        let mut run = 0.0f64;
        for &v in &self.f {
            let w = v.clamp(0.0, 1.0).max(run);
            if w != v {
                changed += 1;
            }
            run = w;
            out.push(w);
        }
        let frac = changed as f64 / self.f.len().max(1) as f64;
        (CdfCurve { s: self.s.clone(), f: out }, frac)
    }

    /// Linear interpolation, flat outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.s;
        if x <= s[0] {
            return self.f[0];
        }
        if x >= s[s.len() - 1] {
            return self.f[s.len() - 1];
        }
        let i = s.partition_point(|&v| v <= x) - 1;
        let w = (x - s[i]) / (s[i + 1] - s[i]);
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }
}

pub fn uniform_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    /// sup over the merged grid
    pub sup: f64,
    /// largest increment of either curve across one gap of the merged grid
    pub gap_bound: f64,
}

/// Sup distance over the merged grid, plus the gap modulus that bounds the
/// error of a grid sup for monotone curves.
pub fn kolmogorov_distance(a: &CdfCurve, b: &CdfCurve) -> Distance {
    let mut s: Vec<f64> = a.s.iter().chain(&b.s).cloned().collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s.dedup();
    let fa: Vec<f64> = s.iter().map(|&x| a.eval(x)).collect();
    let fb: Vec<f64> = s.iter().map(|&x| b.eval(x)).collect();
    let sup = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let gap_bound = (1..s.len())
        .map(|i| (fa[i] - fa[i - 1]).abs().max((fb[i] - fb[i - 1]).abs()))
        .fold(0.0, f64::max);
    Distance { sup, gap_bound }
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` panels of 16 nodes.
pub fn composite_gl(a: f64, b: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    let g = Grid::gauss_legendre(16)?;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(16 * panels);
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        for (x, w) in g.nodes().iter().zip(g.weights()) {
            out.push((x0 + h * x, h * w));
        }
    }
    Ok(out)
}

/// Sine integral Si(x) by composite quadrature.
pub fn sine_integral(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let panels = (x.abs().ceil() as usize).max(1);
    composite_gl(0.0, x.abs(), panels)
        .unwrap()
        .iter()
        .map(|&(t, w)| w * t.sin() / t)
        .sum::<f64>()
        * x.signum()
}

/// f(t) = mu_n(A_{it/sqrt n}^{0,n} 1) for each t, on a normalized cocycle.
pub fn characteristic_values(cocycle: &Cocycle, start: i64, n: usize, ts: &[f64], gibbs_end: &[f64]) -> Result<Vec<C64>> {
    let mu: Vec<C64> = gibbs_end.iter().map(|&w| C64::new(w, 0.0)).collect();
    let one = vec![C64::new(1.0, 0.0); cocycle.grid().len()];
    let scale = (n as f64).sqrt();
    ts.par_iter()
        .map(|&t| {
            let fz = cocycle.at(C64::new(0.0, t / scale));
            let (v, ls) = cocycle_apply(&fz, start, n, &one)?;
            let f = ls.exp() * dot(&mu, &v);
            if f.norm() > 1.0 + 1e-8 {
                return Err(Error::Pipeline(format!("|f({t})| = {} exceeds 1", f.norm())));
            }
            Ok(f)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub t_max: f64,
    pub t_nodes: usize,
    pub depth: usize,
}

fn require_normalized(cocycle: &Cocycle) -> Result<()> {
    if cocycle.model().is_normalized() || cocycle.normalization().is_some() {
        Ok(())
    } else {
        Err(Error::Domain("characteristic inversion needs a normalized cocycle".into()))
    }
}

/// Default t_max for variance v.
pub fn default_t_max(v: f64) -> f64 {
    if v > 0.0 {
        (20.0 * v.sqrt()).max(10.0 / v.sqrt())
    } else {
        40.0
    }
}

/// CDF of S_n / sqrt(n) under mu_start by Gil-Pelaez inversion of the
/// operator characteristic function on [0, t_max], with the Gaussian model
/// e^{-vt^2/2} beyond t_max.
pub fn cdf_via_characteristic(cocycle: &Cocycle, start: i64, n: usize, s_grid: &[f64], v: f64, opts: &InversionOptions) -> Result<CdfCurve> {
    require_normalized(cocycle)?;
    let t_max = opts.t_max;
    if v > 0.0 && t_max < 20.0 * v.sqrt() {
        return Err(Error::Domain(format!("t_max {t_max} below 20 sqrt(v)")));
    }
    let s_edge = s_grid.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if s_edge > 0.0 && (opts.t_nodes as f64) * 2.0 * PI / (t_max * s_edge) < 8.0 {
        return Err(Error::Domain("fewer than 8 nodes per oscillation period at the s-range edge".into()));
    }
    let panels = opts.t_nodes.div_ceil(16).max(1);
    let rule = composite_gl(0.0, t_max, panels)?;
    let ts: Vec<f64> = rule.iter().map(|p| p.0).collect();
    let gibbs = gibbs_weights(cocycle, start + n as i64, start + n as i64, opts.depth)?.remove(0);
    let f = characteristic_values(cocycle, start, n, &ts, &gibbs)?;
    let tail = if v > 0.0 {
        Some(composite_gl(t_max, t_max + 12.0 / v.sqrt(), 32)?)
    } else {
        None
    };
    let fs: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let mut integral: f64 = rule
                .iter()
                .zip(&f)
                .map(|(&(t, w), ft)| w * (C64::from_polar(1.0, -t * s) * ft).im / t)
                .sum();
            integral += match &tail {
                Some(rule) => rule.iter().map(|&(t, w)| -w * (t * s).sin() * (-0.5 * v * t * t).exp() / t).sum(),
                None => {
                    // f(t) = 1 beyond t_max when there is no spread
                    -s.signum() * (PI / 2.0 - sine_integral(s.abs() * t_max))
                }
            };
            0.5 - integral / PI
        })
        .collect();
    Ok(CdfCurve { s: s_grid.to_vec(), f: fs })
}

/// Refuse observables whose norm estimate does not decay on compact t-sets.
pub fn lattice_check(cocycle: &Cocycle, n: usize) -> Result<()> {
    let ts: Vec<f64> = (10..=160).map(|i| i as f64 / 20.0).collect();
    let est = norm_estimate(cocycle, 0, n, &ts, NormSpec::default())?;
    let (t, e) = ts
        .iter()
        .zip(&est)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or_else(|| Error::Domain("empty t-set".into()))?;
    if *e > 0.9 {
        return Err(Error::Refused(format!(
            "norm estimate {e:.4} at t = {t} after {n} steps shows no decay; observable looks lattice"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    pub n_grid: usize,
    pub jet: JetOptions,
    pub inversion_nodes: usize,
    /// band edges delta_0 sqrt(n), B sqrt(n), B n^{d/2}
    pub delta0: f64,
    pub band_b: f64,
    pub s_range: f64,
    pub s_points: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            n_grid: 0,
            jet: JetOptions {
                order: 6,
                radius: 0.05,
                nodes: 64,
                depth: 60,
                check_radius: false,
            },
            inversion_nodes: 1024,
            delta0: 0.5,
            band_b: 2.0,
            s_range: 5.0,
            s_points: 801,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderRow {
    pub n: usize,
    pub variance: f64,
    /// distances to the oracle: plain Gaussian, order 1, ..., order d
    pub distances: Vec<f64>,
    pub gap_bound: f64,
    /// Esseen-type integrals int |f - f_d| / t over the three bands
    pub bands: [f64; 3],
    pub clipped: f64,
    pub oracle: CdfCurve,
    pub model: EdgeworthModel,
}

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub d: usize,
    pub rows: Vec<OrderRow>,
    /// log-log slope of each distance column
    pub slopes: Vec<f64>,
    pub pass: bool,
}

struct Oracle {
    variance: f64,
    model: EdgeworthModel,
    curve: CdfCurve,
}

fn oracle_and_model(cocycle: &Cocycle, start: i64, n: usize, d: usize, opts: &ExperimentOptions) -> Result<Oracle> {
    let end = start + n as i64;
    let jet = jet_at_zero(cocycle, start, end, &[end], &opts.jet)?;
    let avg = jet.averages(start, n);
    let lnw = jet.lnw_at(end).ok_or_else(|| Error::Order("missing ln W jet".into()))?;
    let model = build_expansion(&avg, lnw, n, d)?;
    let v = model.variance;
    let s_grid = uniform_grid(-opts.s_range * v.sqrt(), opts.s_range * v.sqrt(), opts.s_points);
    let t_max = default_t_max(v);
    let inv = InversionOptions {
        t_max,
        t_nodes: opts.inversion_nodes,
        depth: opts.jet.depth,
    };
    let curve = cdf_via_characteristic(cocycle, start, n, &s_grid, v, &inv)?;
    Ok(Oracle { variance: v, model, curve })
}

fn band_integrals(cocycle: &Cocycle, n: usize, model: &EdgeworthModel, opts: &ExperimentOptions) -> Result<[f64; 3]> {
    let sn = (n as f64).sqrt();
    let edges = [
        1e-9,
        opts.delta0 * sn,
        opts.band_b * sn,
        opts.band_b * (n as f64).powf(model.d as f64 / 2.0).max(sn),
    ];
    let gibbs = gibbs_weights(cocycle, n as i64, n as i64, opts.jet.depth)?.remove(0);
    let mut out = [0.0; 3];
    for b in 0..3 {
        if edges[b + 1] <= edges[b] {
            continue;
        }
        let rule = composite_gl(edges[b], edges[b + 1], 4)?;
        let ts: Vec<f64> = rule.iter().map(|p| p.0).collect();
        let f = characteristic_values(cocycle, 0, n, &ts, &gibbs)?;
        out[b] = rule
            .iter()
            .zip(&f)
            .map(|(&(t, w), ft)| w * (ft - model.characteristic(t)).norm() / t)
            .sum();
    }
    Ok(out)
}

/// Distances from the oracle CDF to the Gaussian and to the order 1..=d
/// expansions over an n-grid, with log-log slopes.
pub fn order_improvement_experiment(cocycle: &Cocycle, ns: &[usize], d: usize, opts: &ExperimentOptions) -> Result<OrderReport> {
    let probe = JetOptions {
        order: 2,
        nodes: 16,
        ..opts.jet
    };
    let v = jet_at_zero(cocycle, 0, 100, &[], &probe)?.average(2, 0, 100).re;
    if !(v > 1e-12) {
        return Err(Error::Degenerate(format!("variance {v:e} is not positive")));
    }
    lattice_check(cocycle, 100)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let o = oracle_and_model(cocycle, 0, n, d, opts)?;
        let mut distances = Vec::with_capacity(d + 1);
        let mut gap: f64 = 0.0;
        let mut clipped: f64 = 0.0;
        for k in 0..=d {
            let (g, frac) = CdfCurve::from_fn(&o.curve.s, |s| evaluate_expansion(&o.model, s, k)).clipped();
            clipped = clipped.max(frac);
            let dist = kolmogorov_distance(&o.curve, &g);
            gap = gap.max(dist.gap_bound);
            distances.push(dist.sup);
        }
        let bands = band_integrals(cocycle, n, &o.model, opts)?;
        rows.push(OrderRow {
            n,
            variance: o.variance,
            distances,
            gap_bound: gap,
            bands,
            clipped,
            oracle: o.curve,
            model: o.model,
        });
    }
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slopes: Vec<f64> = (0..=d)
        .map(|k| power_fit(&nf, &rows.iter().map(|r| r.distances[k]).collect::<Vec<_>>()).1)
        .collect();
    let pass = slopes.windows(2).all(|w| (w[0] - w[1] - 0.5).abs() <= 0.15 || w[1] <= w[0] - 0.5);
    Ok(OrderReport { d, rows, slopes, pass })
}

#[derive(Debug, Clone)]
pub struct CltRateReport {
    pub ns: Vec<usize>,
    pub sigma2: f64,
    pub per_path: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
    /// max over n of median / (n^{-1/2} ln n)
    pub envelope: f64,
}

/// Sup distance between the oracle CDF and N(0, sigma2) (fixed variance)
/// along an n-grid for each path.
pub fn clt_rate_experiment(cocycles: &[Cocycle], ns: &[usize], sigma2: f64, opts: &ExperimentOptions) -> Result<CltRateReport> {
    if !(sigma2 > 1e-12) {
        return Err(Error::Degenerate(format!("variance {sigma2:e} is not positive")));
    }
    let s_grid = uniform_grid(-opts.s_range * sigma2.sqrt(), opts.s_range * sigma2.sqrt(), opts.s_points);
    let gauss = CdfCurve::from_fn(&s_grid, |s| normal_cdf(s / sigma2.sqrt()));
    let inv = InversionOptions {
        t_max: default_t_max(sigma2) * 1.5,
        t_nodes: opts.inversion_nodes,
        depth: opts.jet.depth,
    };
    let per_path: Vec<Vec<f64>> = cocycles
        .iter()
        .map(|c| {
            ns.iter()
                .map(|&n| {
                    let curve = cdf_via_characteristic(c, 0, n, &s_grid, sigma2, &inv)?;
                    Ok(kolmogorov_distance(&curve, &gauss).sup)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let med: Vec<f64> = (0..ns.len())
        .map(|i| median(&per_path.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (a, b, r2) = power_fit(&nf, &med);
    let envelope = nf.iter().zip(&med).map(|(n, m)| m / (n.ln() / n.sqrt())).fold(0.0, f64::max);
    Ok(CltRateReport {
        ns: ns.to_vec(),
        sigma2,
        per_path,
        median: med,
        exponent: b,
        constant: a.exp(),
        r2,
        envelope,
    })
}

#[derive(Debug, Clone)]
pub struct CoefficientReport {
    pub k: usize,
    pub ns: Vec<usize>,
    /// P_k coefficients per n (index j = power of s)
    pub coefficients: Vec<Vec<f64>>,
    /// max - min of each coefficient over the tail n >= tail_from
    pub tail_oscillation: Vec<f64>,
    /// constant c in c n^{-1/2} ln n fitted on n < tail_from
    pub envelope_constant: Vec<f64>,
    pub tail_from: usize,
}

/// Coefficients of P_k for S_n started at theta^{-n} omega: jets on steps
/// -n..0 and the W jet on fiber 0.
pub fn coefficient_convergence_experiment(cocycle: &Cocycle, ns: &[usize], k: usize, tail_from: usize, opts: &ExperimentOptions) -> Result<CoefficientReport> {
    let n_max = *ns.iter().max().ok_or_else(|| Error::Domain("empty n-grid".into()))?;
    let jet: PressureJet = jet_at_zero(cocycle, -(n_max as i64), 0, &[0], &opts.jet)?;
    let lnw = jet.lnw_at(0).ok_or_else(|| Error::Order("missing ln W jet".into()))?.to_vec();
    let mut coefficients = Vec::with_capacity(ns.len());
    for &n in ns {
        let avg = jet.averages(-(n as i64), n);
        let m = build_expansion(&avg, &lnw, n, k.max(1))?;
        coefficients.push(m.polys[k - 1].clone());
    }
    let width = coefficients.iter().map(|c| c.len()).max().unwrap_or(0);
    let col = |j: usize| -> Vec<f64> { coefficients.iter().map(|c| c.get(j).cloned().unwrap_or(0.0)).collect() };
    let mut tail_oscillation = Vec::with_capacity(width);
    let mut envelope_constant = Vec::with_capacity(width);
    for j in 0..width {
        let v = col(j);
        let tail: Vec<f64> = ns.iter().zip(&v).filter(|(n, _)| **n >= tail_from).map(|(_, x)| *x).collect();
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        tail_oscillation.push(if tail.is_empty() { 0.0 } else { hi - lo });
        let last = *v.last().unwrap();
        let c = ns
            .iter()
            .zip(&v)
            .filter(|(n, _)| **n < tail_from)
            .map(|(&n, x)| (x - last).abs() / ((n as f64).ln() / (n as f64).sqrt()))
            .fold(0.0, f64::max);
        envelope_constant.push(c);
    }
    Ok(CoefficientReport {
        k,
        ns: ns.to_vec(),
        coefficients,
        tail_oscillation,
        envelope_constant,
        tail_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_pdf;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn golden_one_term() {
        let m = build_expansion(&[c(0.0), c(0.0), c(1.0), c(1.0)], &[c(0.0), c(0.0)], 100, 1).unwrap();
        let want = [1.0 / 6.0, 0.0, -1.0 / 6.0];
        for (j, w) in want.iter().enumerate() {
            assert!((m.coefficient(1, j) - w).abs() < 1e-10);
        }
        let f0 = evaluate_expansion(&m, 0.0, 1);
        assert!((f0 - (0.5 + normal_pdf(0.0) / 60.0)).abs() < 1e-14);
        assert!((evaluate_expansion(&m, 10.0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_term() {
        let w = 0.3;
        let m = build_expansion(&[c(0.0), c(0.0), c(1.0), c(0.0)], &[c(0.0), c(w)], 100, 1).unwrap();
        assert!((m.coefficient(1, 0) + w).abs() < 1e-14);
        assert!(m.coefficient(1, 2).abs() < 1e-14);
    }

    #[test]
    fn gaussian_jets_give_no_corrections() {
        let m = build_expansion(&[c(0.0), c(0.0), c(0.7), c(0.0), c(0.0), c(0.0)], &[c(0.0); 4], 50, 3).unwrap();
        assert!(m.polys.iter().all(|p| p.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn expansion_errors() {
        assert!(matches!(build_expansion(&[c(0.0), c(0.0), c(0.0), c(1.0)], &[c(0.0); 2], 10, 1), Err(Error::Degenerate(_))));
        assert!(matches!(build_expansion(&[c(0.0), c(0.0), c(1.0)], &[c(0.0); 2], 10, 1), Err(Error::Order(_))));
        assert!(matches!(build_expansion(&[c(0.0); 8], &[c(0.0); 8], 10, 4), Err(Error::Order(_))));
    }

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(2), vec![-1.0, 0.0, 1.0]);
        assert_eq!(hermite(3), vec![0.0, -3.0, 0.0, 1.0]);
        assert_eq!(hermite(4), vec![3.0, 0.0, -6.0, 0.0, 1.0]);
    }

    // numeric Gil-Pelaez for (it)^j e^{-vt^2/2} against the closed image
    #[test]
    fn monomial_images_match_numeric_inversion() {
        let v = 1.3;
        let rule = composite_gl(0.0, 14.0, 40).unwrap();
        for j in 1..=8 {
            let p = monomial_image(j, v);
            for &s in &[-2.5, -0.7, 0.0, 0.4, 1.9, 3.0] {
                // G(s) - G(-inf) by Gil-Pelaez; G has zero total mass for j >= 1
                let num: f64 = rule
                    .iter()
                    .map(|&(t, w)| {
                        let f = C64::new(0.0, t).powu(j as u32) * (-0.5 * v * t * t).exp();
                        w * (C64::from_polar(1.0, -t * s) * f).im / t
                    })
                    .sum::<f64>()
                    / -PI;
                let closed = poly_real(&p, s) * (-s * s / (2.0 * v)).exp() / (2.0 * PI).sqrt();
                assert!((num - closed).abs() < 1e-8, "j={j} s={s}: {num} vs {closed}");
            }
        }
    }

    #[test]
    fn sine_integral_values() {
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-13);
        assert!((sine_integral(-1.0) + 0.946_083_070_367_183).abs() < 1e-13);
        assert!((sine_integral(50.0) - 1.551_617_072_485_936).abs() < 1e-12);
    }

    #[test]
    fn distances() {
        let s = uniform_grid(-6.0, 6.0, 24001);
        let a = CdfCurve::from_fn(&s, normal_cdf);
        assert_eq!(kolmogorov_distance(&a, &a).sup, 0.0);
        let b = CdfCurve::from_fn(&s, |x| normal_cdf(x / 1.1));
        assert!((kolmogorov_distance(&a, &b).sup - 0.023_044_832).abs() < 1e-6);
        let step = CdfCurve::from_fn(&s, |x| if x >= 0.0 { 1.0 } else { 0.0 });
        assert!((kolmogorov_distance(&step, &a).sup - 0.5).abs() < 1e-12);
    }
}
