//! Environment paths: reproducibility, shifts and mixing profiles.

use quenched::env::{phi_mixing_profile, sample_path, shift, EnvModel};

fn main() -> quenched::Result<()> {
    let markov = EnvModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]])?;
    let p = sample_path(&markov, 42, 10, 30);
    let show = |lo, hi| -> quenched::Result<String> {
        Ok(p.symbols_in(lo, hi)?.iter().map(|s| s.to_string()).collect())
    };
    println!("symbols -10..=30: {}", show(-10, 30)?);
    println!("stationary law: {:?}", markov.stationary());

    let q = shift(&p, 5)?;
    println!("shift by 5, symbol 0 = {} (was symbol 5 = {})", q.symbol(0)?, p.symbol(5)?);
    match shift(&p, 40) {
        Err(e) => println!("shift by 40: {e}"),
        Ok(_) => println!("shift by 40 unexpectedly fit"),
    }

    let prof = phi_mixing_profile(&markov, 12);
    println!("phi(n) <= {:.3} * {:.3}^n, summable: {}", prof.kappa, prof.rho, prof.summable);
    for (n, v) in prof.values.iter().enumerate().take(6) {
        println!("  phi({}) = {v:.3e}", n + 1);
    }

    let iid = EnvModel::iid(vec![0.5, 0.5])?;
    let long = sample_path(&iid, 7, 0, 100_000);
    let zeros = long.symbols_in(0, 100_000)?.iter().filter(|&&s| s == 0).count();
    println!("i.i.d. frequency of symbol 0 over 1e5 draws: {:.4}", zeros as f64 / 100_001.0);
    Ok(())
}
