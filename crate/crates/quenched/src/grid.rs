//! Fiber grids, grid-sampled fields and dense discretized operators.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Dirichlet-kernel interpolation on the uniform circle grid.
    Trig,
    PiecewiseLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// x_j = j/N on the circle, equal weights
    Circle,
    /// Gauss-Legendre nodes on [0, 1]
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    interp: Interp,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn circle(n: usize) -> Result<Arc<Grid>> {
        Grid::circle_with(n, Interp::Trig)
    }

    pub fn circle_with(n: usize, interp: Interp) -> Result<Arc<Grid>> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid size {n} must be a power of two >= 4")));
        }
        Ok(Arc::new(Grid {
            kind: GridKind::Circle,
            interp,
            nodes: (0..n).map(|j| j as f64 / n as f64).collect(),
            weights: vec![1.0 / n as f64; n],
        }))
    }

    /// Golub-Welsch nodes and weights mapped to [0, 1].
    pub fn gauss_legendre(n: usize) -> Result<Arc<Grid>> {
        if n < 2 {
            return Err(Error::Config("need at least 2 Gauss-Legendre nodes".into()));
        }
        let jac = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (0.5 * (eig.eigenvalues[i] + 1.0), v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(Arc::new(Grid {
            kind: GridKind::GaussLegendre,
            interp: Interp::PiecewiseLinear,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.kind {
            GridKind::Circle => d.min(1.0 - d),
            GridKind::GaussLegendre => d,
        }
    }

    /// Cell boundaries [left, right) attached to node j, used for sampling.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        match self.kind {
            GridKind::Circle => {
                let h = 0.5 / self.len() as f64;
                (self.nodes[j] - h, self.nodes[j] + h)
            }
            GridKind::GaussLegendre => {
                let left: f64 = self.weights[..j].iter().sum();
                (left, left + self.weights[j])
            }
        }
    }

    /// Coefficients c_j with g(y) ~ sum_j c_j g(x_j).
    pub fn interp_row(&self, y: f64) -> Vec<f64> {
        let n = self.len();
        match (self.kind, self.interp) {
            (GridKind::Circle, Interp::Trig) => {
                (0..n).map(|j| dirichlet(n, y - self.nodes[j])).collect()
            }
            (GridKind::Circle, Interp::PiecewiseLinear) => {
                let mut row = vec![0.0; n];
                let t = y.rem_euclid(1.0) * n as f64;
                let i = (t.floor() as usize) % n;
                let f = t - t.floor();
                row[i] += 1.0 - f;
                row[(i + 1) % n] += f;
                row
            }
            (GridKind::GaussLegendre, _) => {
                let mut row = vec![0.0; n];
                let x = &self.nodes;
                if y <= x[0] {
                    row[0] = 1.0;
                } else if y >= x[n - 1] {
                    row[n - 1] = 1.0;
                } else {
                    let i = x.partition_point(|&v| v <= y) - 1;
                    let f = (y - x[i]) / (x[i + 1] - x[i]);
                    row[i] = 1.0 - f;
                    row[i + 1] = f;
                }
                row
            }
        }
    }
}

/// Symmetric Dirichlet kernel for even N: sin(pi N d) cot(pi d) / N.
pub fn dirichlet(n: usize, d: f64) -> f64 {
    let d = d - d.round();
    let s = (PI * d).sin();
    if s.abs() < 1e-15 {
        return 1.0;
    }
    (PI * n as f64 * d).sin() * (PI * d).cos() / (s * n as f64)
}

/// Parameters of the Hölder-type norm ||g||_inf + v_{alpha,xi}(g).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub alpha: f64,
    pub xi: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        NormSpec { alpha: 1.0, xi: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberField {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl FiberField {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>) -> Self {
        assert_eq!(grid.len(), values.len());
        FiberField { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: C64) -> Self {
        let n = grid.len();
        FiberField::new(grid, vec![c; n])
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        FiberField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup(&self.values)
    }

    /// Max finite-difference ratio over grid pairs at distance < xi.
    /// A lower bound for the continuum seminorm.
    pub fn holder_seminorm(&self, spec: NormSpec) -> f64 {
        holder(&self.grid, &self.values, spec)
    }

    /// The fiber norm: sup + Hölder on the circle, sup on quadrature grids.
    pub fn norm(&self, spec: NormSpec) -> f64 {
        fiber_norm(&self.grid, &self.values, spec)
    }

    pub fn integrate(&self, weights: &[C64]) -> C64 {
        dot(weights, &self.values)
    }

    pub fn lebesgue_mean(&self) -> C64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| v * w)
            .sum()
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.grid
            .interp_row(x)
            .iter()
            .zip(&self.values)
            .map(|(c, v)| v * c)
            .sum()
    }
}

pub fn sup(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn holder(grid: &Grid, v: &[C64], spec: NormSpec) -> f64 {
    let x = grid.nodes();
    let n = v.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = grid.distance(x[i], x[j]);
            if d < spec.xi && d > 0.0 {
                let r = (v[i] - v[j]).norm() / d.powf(spec.alpha);
                best = best.max(r);
            }
        }
    }
    best
}

pub fn fiber_norm(grid: &Grid, v: &[C64], spec: NormSpec) -> f64 {
    match grid.kind() {
        GridKind::Circle => sup(v) + holder(grid, v, spec),
        GridKind::GaussLegendre => sup(v),
    }
}

pub fn dot(w: &[C64], g: &[C64]) -> C64 {
    w.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOp {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseOp {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseOp {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseOp { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn apply(&self, g: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        self.apply_into(g, &mut out);
        out
    }

    pub fn apply_into(&self, g: &[C64], out: &mut [C64]) {
        debug_assert_eq!(g.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let (mut re, mut im) = (0.0, 0.0);
            for (a, b) in row.iter().zip(g) {
                re += a.re * b.re - a.im * b.im;
                im += a.re * b.im + a.im * b.re;
            }
            *o = C64::new(re, im);
        }
    }

    /// w -> M^T w (plain transpose, no conjugation).
    pub fn apply_t(&self, w: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, wi) in w.iter().enumerate() {
            if wi.re == 0.0 && wi.im == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * wi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseOp) -> DenseOp {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseOp::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k).to_vec();
                for (o, b) in out.row_mut(i).iter_mut().zip(&orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    /// Max absolute row sum (induced sup norm).
    pub fn sup_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,re,im")?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self.get(i, j);
                writeln!(w, "{},{},{},{}", i, j, crate::report::num(z.re), crate::report::num(z.im))?;
            }
        }
        Ok(())
    }
}
