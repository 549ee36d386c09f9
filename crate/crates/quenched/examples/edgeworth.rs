//! Order-improvement experiment on the doubling map with u = cos 2 pi x.

use quenched::dynamics::{MapFamily, ObservablePair, ScalarField};
use quenched::edgeworth::{order_improvement_experiment, ExperimentOptions};
use quenched::env::{sample_path, EnvModel};
use quenched::grid::Grid;
use quenched::operators::{Cocycle, FiberModel, Model, TransferModel};

fn main() -> quenched::Result<()> {
    let n_grid: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let model = Model::new(
        EnvModel::deterministic(),
        FiberModel::Transfer(TransferModel {
            maps: MapFamily::affine(&[2])?,
            obs: ObservablePair::geometric(vec![ScalarField::cos(&[1.0])]),
        }),
        Some(Grid::circle(n_grid)?),
    )?;
    let c = Cocycle::new(model.clone(), sample_path(model.env(), 0, 100, 4000));
    let ns = [50, 100, 200, 400, 800, 1600, 3200];
    let t = std::time::Instant::now();
    let r = order_improvement_experiment(&c, &ns, 2, &ExperimentOptions::default())?;
    for row in &r.rows {
        println!(
            "n={:5} v={:.8} gauss {:.3e} d1 {:.3e} d2 {:.3e} gap {:.1e} bands {:.1e} {:.1e} {:.1e}",
            row.n, row.variance, row.distances[0], row.distances[1], row.distances[2], row.gap_bound, row.bands[0], row.bands[1], row.bands[2]
        );
    }
    println!("slopes {:?} pass {} in {:?}", r.slopes, r.pass, t.elapsed());
    Ok(())
}
