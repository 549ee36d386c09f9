//! Norm decay of the twisted cocycle on compact t-sets, with the lattice
//! observable as a negative control.

use std::f64::consts::PI;

use quenched::dynamics::ScalarField;
use quenched::edgeworth::lattice_check;
use quenched::grid::NormSpec;
use quenched::operators::norm_estimate;
use quenched::presets;

fn main() -> quenched::Result<()> {
    let ts = [0.5, 1.0, 2.0, PI, 6.0];
    let ns = [10, 25, 50, 100, 200];
    for (name, u) in [("cos", ScalarField::cos(&[1.0])), ("lattice", presets::lattice_steps())] {
        let m = presets::doubling(32, u)?;
        let cy = presets::cocycle(&m, 0, 0, 201, 40)?;
        println!("{name}:");
        for &n in &ns {
            let e = norm_estimate(&cy, 0, n, &ts, NormSpec::default())?;
            let row: Vec<String> = e.iter().map(|v| format!("{v:.3e}")).collect();
            println!("  n = {n:>3}: {}", row.join("  "));
        }
        match lattice_check(&cy, 100) {
            Ok(()) => println!("  accepted for Edgeworth experiments"),
            Err(e) => println!("  {e}"),
        }
    }
    Ok(())
}
