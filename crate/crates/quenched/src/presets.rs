//! Ready-made models and the path/normalization setup shared by the
//! command line, the examples and the tests.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::dynamics::{center_observable, MapFamily, ObservablePair, ScalarField};
use crate::env::{sample_path, EnvModel};
use crate::error::Result;
use crate::grid::Grid;
use crate::operators::{Cocycle, Direction, FiberModel, Kernel, KernelFamily, MarkovModel, Model, Quadrature, TransferModel};
use crate::rpf::{gibbs_weights, normalize_operator};

/// T x = 2x with the geometric potential.
pub fn doubling(grid: usize, u: ScalarField) -> Result<Arc<Model>> {
    slopes(EnvModel::deterministic(), &[2], vec![u], grid)
}

/// Affine maps x -> m_s x chosen by the environment symbol s.
pub fn slopes(env: EnvModel, slopes: &[u32], u: Vec<ScalarField>, grid: usize) -> Result<Arc<Model>> {
    Model::new(
        env,
        FiberModel::Transfer(TransferModel {
            maps: MapFamily::affine(slopes)?,
            obs: ObservablePair::geometric(u),
        }),
        Some(Grid::circle(grid)?),
    )
}

/// Slopes 2 and 3 drawn i.i.d. with probabilities (p, 1 - p), the same
/// observable on both.
pub fn mixed23(p: f64, u: ScalarField, grid: usize) -> Result<Arc<Model>> {
    slopes(EnvModel::iid(vec![p, 1.0 - p])?, &[2, 3], vec![u.clone(), u], grid)
}

/// u = cos 2 pi x + a cos 4 pi x.
pub fn cos_pair(a: f64) -> ScalarField {
    ScalarField::cos(&[1.0, a])
}

/// Markov chain on the circle with kernel 1 + a cos 2 pi (x - y) per symbol.
pub fn doeblin_cos(env: EnvModel, amps: &[f64], u: Vec<ScalarField>, nodes: usize) -> Result<Arc<Model>> {
    let amax = amps.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    Model::new(
        env,
        FiberModel::Markov(MarkovModel {
            kernels: KernelFamily {
                kernels: amps.iter().map(|&a| Kernel { cos: vec![a], shift: 0.0 }).collect(),
                alpha: (1.0 - amax).min(1.0 / (1.0 + amax)),
                nodes,
                quadrature: Quadrature::Trapezoid,
            },
            u,
        }),
        None,
    )
}

/// Independent uniform draws with u(y) = y - 1/2: S_n is an Irwin-Hall sum.
pub fn irwin_hall(nodes: usize) -> Result<Arc<Model>> {
    Model::new(
        EnvModel::deterministic(),
        FiberModel::Markov(MarkovModel {
            kernels: KernelFamily {
                kernels: vec![Kernel::independent()],
                alpha: 1.0,
                nodes,
                quadrature: Quadrature::GaussLegendre,
            },
            u: vec![ScalarField::Affine {
                slope: 1.0,
                intercept: -0.5,
            }],
        }),
        None,
    )
}

/// +1 on [0, 1/2), -1 on [1/2, 1): integer valued, so S_n lives on a lattice.
pub fn lattice_steps() -> ScalarField {
    ScalarField::Steps {
        edges: vec![0.5],
        values: vec![1.0, -1.0],
    }
}

/// A sampled path with room for `depth` on both sides of fibers
/// [-past, future], normalized when the model does not fix 1 by itself.
pub fn cocycle(model: &Arc<Model>, seed: u64, past: usize, future: usize, depth: usize) -> Result<Cocycle> {
    let (a, b) = (past + depth + 1, future + depth + 1);
    // Markov fibers run against path time
    let path = match model.direction() {
        Direction::Forward => sample_path(model.env(), seed, a, b),
        Direction::Backward => sample_path(model.env(), seed, b, a),
    };
    let c = Cocycle::new(model.clone(), path);
    if model.is_normalized() {
        Ok(c)
    } else {
        normalize_operator(&c, -(past as i64), future as i64, depth)
    }
}

/// Rebuilds the model with each symbol's observable centered by its
/// average Gibbs mean along a sampled window.
pub fn centered(model: &Arc<Model>, seed: u64, window: usize, depth: usize) -> Result<Arc<Model>> {
    let (a, b) = (depth + 1, window + depth + 1);
    let path = match model.direction() {
        Direction::Forward => sample_path(model.env(), seed, a, b),
        Direction::Backward => sample_path(model.env(), seed, b, a),
    };
    // Gibbs weights do not need the normalization
    let c = Cocycle::new(model.clone(), path);
    let gibbs = gibbs_weights(&c, 0, window as i64, depth)?;
    // step k reads u on fiber k
    let tagged: Vec<(u32, Vec<C64>)> = (0..window)
        .map(|k| {
            let w = gibbs[k].iter().map(|&x| C64::new(x, 0.0)).collect();
            Ok((c.observable_symbol(k as i64)?, w))
        })
        .collect::<Result<_>>()?;
    let u = center_observable(model.observables(), c.grid(), &tagged);
    match model.fibers() {
        FiberModel::Transfer(t) => {
            let mut t = t.clone();
            t.obs.u = u;
            Model::new(model.env().clone(), FiberModel::Transfer(t), Some(model.grid().clone()))
        }
        FiberModel::Markov(m) => {
            let mut m = m.clone();
            m.u = u;
            Model::new(model.env().clone(), FiberModel::Markov(m), None)
        }
    }
}
