//! Pressure jets and moments on the random {2,3} slope environment.

use quenched::dynamics::{MapFamily, ObservablePair, ScalarField};
use quenched::env::{sample_path, EnvModel};
use quenched::grid::Grid;
use quenched::moments::{asymptotic_moment, jet_at_zero, mc_moment, mc_samples, operator_moments, JetOptions, MomentOptions};
use quenched::operators::{Cocycle, FiberModel, Model, TransferModel};

fn main() -> quenched::Result<()> {
    let a = 0.5;
    let model = Model::new(
        EnvModel::iid(vec![0.5, 0.5])?,
        FiberModel::Transfer(TransferModel {
            maps: MapFamily::affine(&[2, 3])?,
            obs: ObservablePair::geometric(vec![ScalarField::cos(&[1.0, a]); 2]),
        }),
        Some(Grid::circle(32)?),
    )?;
    let path = sample_path(model.env(), 7, 200, 3000);
    let c = Cocycle::new(model, path.clone());

    let n = 400;
    let t = std::time::Instant::now();
    let jet = jet_at_zero(&c, 0, n as i64, &[0, n as i64], &JetOptions::default())?;
    let avg = jet.averages(0, n);
    println!("jets in {:?}", t.elapsed());
    for (l, v) in avg.iter().enumerate() {
        println!("avg Pi^({l}) = {:.10} {:+.2e}i", v.re, v.im);
    }
    let twos = (0..n as i64).filter(|&i| path.symbol(i).unwrap() == 0).count();
    println!("exact sigma2 along path = {:.10}", (1.0 + a * a) / 2.0 + a * twos as f64 / n as f64);

    let ns = [50, 100, 200, 400];
    let t = std::time::Instant::now();
    let g = operator_moments(&c, &ns, &[2, 3, 4], &MomentOptions::default())?;
    println!("operator moments in {:?}", t.elapsed());
    for (i, &n) in ns.iter().enumerate() {
        let twos = (0..n as i64 - 1).filter(|&i| path.symbol(i).unwrap() == 0).count();
        let exact = (1.0 + a * a) / 2.0 + a * twos as f64 / n as f64;
        println!("n={n}: gamma2 {:.10} (exact {:.10}) gamma3 {:.6} gamma4/g2^2 {:.6}", g[0][i], exact, g[1][i], g[2][i] / g[0][i].powi(2));
    }
    if let Some(lw) = jet.lnw_at(n as i64) {
        for k in [2, 4] {
            let m = asymptotic_moment(&avg, lw, k, n)?;
            println!("k={k}: limit {:.8} expansion {:.8}", m.limit, m.expansion);
        }
    }
    let t = std::time::Instant::now();
    let s = mc_samples(&c, 200, 100_000, 1, 60)?;
    let m = mc_moment(&s, 2, 200, 200, 1, 0.05);
    println!("mc gamma2 n=200: {:.5} [{:.5}, {:.5}] in {:?}", m.value, m.ci_lo, m.ci_hi, t.elapsed());
    Ok(())
}
