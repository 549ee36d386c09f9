//! Convergence rates of the second moment and of the CLT distance on the
//! random {2,3} environment, against a deterministic control.

use quenched::edgeworth::{clt_rate_experiment, ExperimentOptions};
use quenched::env::EnvModel;
use quenched::moments::{moment_rate_experiment, MomentOptions};
use quenched::presets;

fn main() -> quenched::Result<()> {
    let paths: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(21);
    let a = 0.5;
    let sigma2 = (1.0 + a * a) / 2.0 + a / 2.0;
    let ns: Vec<usize> = (0..6).map(|i| 100 << i).collect();
    let top = *ns.last().unwrap();
    let m = presets::mixed23(0.5, presets::cos_pair(a), 32)?;
    let cys = (0..paths as u64)
        .map(|s| presets::cocycle(&m, 100 + s, 0, top + 1, 60))
        .collect::<quenched::Result<Vec<_>>>()?;
    let r = moment_rate_experiment(&cys, 2, &ns, sigma2, &MomentOptions::default())?;
    println!("|gamma_2,n - sigma^2| over {paths} paths (sigma^2 = {sigma2}):");
    for (n, d) in ns.iter().zip(&r.median) {
        println!("  n = {n:>5}: median {d:.3e}");
    }
    println!("  exponent {:.3} (R2 {:.3}), envelope constant {:.3}", r.exponent, r.r2, r.envelope);

    let det = presets::slopes(EnvModel::deterministic(), &[2], vec![presets::cos_pair(a)], 32)?;
    let dc = presets::cocycle(&det, 0, 0, top + 1, 60)?;
    let r = moment_rate_experiment(&[dc], 2, &ns, (1.0 + a * a) / 2.0 + a, &MomentOptions::default())?;
    println!("deterministic control exponent {:.3}", r.exponent);

    let clt_ns = [100, 200, 400, 800];
    let opts = ExperimentOptions {
        inversion_nodes: 384,
        ..ExperimentOptions::default()
    };
    let few = &cys[..paths.min(5)];
    let c = clt_rate_experiment(few, &clt_ns, sigma2, &opts)?;
    for (n, d) in clt_ns.iter().zip(&c.median) {
        println!("  CLT distance n = {n:>4}: {d:.3e}");
    }
    println!("  CLT exponent {:.3}", c.exponent);
    Ok(())
}
