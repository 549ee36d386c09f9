//! RPF triplets on a random {2,3} path, checked against a dense eigensolve
//! on the deterministic doubling map.

use quenched::dynamics::ScalarField;
use quenched::env::sample_path;
use quenched::grid::NormSpec;
use quenched::operators::Cocycle;
use quenched::presets;
use quenched::rpf::{dense_eigenvalues, estimate_contraction, pressure, solve_triplet, verify_rpf_identities};
use quenched::C64;

fn main() -> quenched::Result<()> {
    let grid: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    let m = presets::mixed23(0.5, presets::cos_pair(0.5), grid)?;
    let cy = Cocycle::new(m.clone(), sample_path(m.env(), 3, 100, 100));
    for z in [C64::new(0.0, 0.0), C64::new(0.1, 0.0), C64::new(0.0, 0.1)] {
        let t0 = solve_triplet(&cy, 0, z, 60, 1e-13)?;
        let t1 = solve_triplet(&cy, 1, z, 60, 1e-13)?;
        let r = verify_rpf_identities(&cy, &t0, &t1)?;
        println!("z = {z}: lambda = {:.12}, residuals {:.1e} {:.1e} {:.1e}", t0.lambda, r[0], r[1], r[2]);
    }
    let e = estimate_contraction(&cy, C64::new(0.0, 0.0), 0, 20, 40, NormSpec::default())?;
    if e.collapsed {
        let n = e.residuals.iter().position(|&r| r < 1e-11).unwrap_or(e.residuals.len());
        println!("contraction: residuals reach roundoff at n = {n}, no rate to fit");
    } else {
        println!("contraction: delta = {:.4}, C = {:.3}, R2 = {:.5}", e.delta, e.c, e.r2);
    }

    let d = presets::doubling(grid, ScalarField::cos(&[1.0]))?;
    let dc = Cocycle::new(d.clone(), sample_path(d.env(), 0, 100, 100));
    let zs: Vec<C64> = (0..=8).map(|j| C64::new(0.0, 0.025 * j as f64)).collect();
    let p = pressure(&dc, 0, &zs, 60, 1e-13)?;
    for (z, pz) in zs.iter().zip(&p).step_by(2) {
        let dense = dense_eigenvalues(&dc.at(*z).dense_step(0)?)[0].ln();
        println!("doubling Pi({z}) = {pz:.12}  dense log = {dense:.12}");
    }
    Ok(())
}
