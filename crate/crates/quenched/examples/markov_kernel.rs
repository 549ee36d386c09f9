//! Markov chains with Doeblin kernels: the Irwin-Hall check of the
//! characteristic-function CDF and the Edgeworth gain over the Gaussian.

use quenched::edgeworth::{build_expansion, cdf_via_characteristic, evaluate_expansion, kolmogorov_distance, uniform_grid, CdfCurve, InversionOptions};
use quenched::moments::{jet_at_zero, JetOptions};
use quenched::presets;

/// P(U_1 + ... + U_n <= x) for i.i.d. uniforms, by the positive recurrence
/// F_m(y) = (y F_{m-1}(y) + (m - y) F_{m-1}(y - 1)) / m.
fn irwin_hall_cdf(n: usize, x: f64) -> f64 {
    // f[j] = F_m(x - j)
    let mut f: Vec<f64> = (0..=n).map(|j| if x - j as f64 >= 0.0 { 1.0 } else { 0.0 }).collect();
    for m in 1..=n {
        let mf = m as f64;
        for j in 0..=n - m {
            let y = x - j as f64;
            f[j] = if y <= 0.0 {
                0.0
            } else if y >= mf {
                1.0
            } else {
                (y * f[j] + (mf - y) * f[j + 1]) / mf
            };
        }
    }
    f[0]
}

fn main() -> quenched::Result<()> {
    let model = presets::irwin_hall(32)?;
    let c = presets::cocycle(&model, 0, 0, 200, 4)?;
    for &n in &[8usize, 64] {
        let v = 1.0 / 12.0;
        let s = uniform_grid(-1.6, 1.6, 641);
        let inv = InversionOptions { t_max: 80.0, t_nodes: 2048, depth: 4 };
        let oracle = cdf_via_characteristic(&c, 0, n, &s, v, &inv)?;
        let exact = CdfCurve::from_fn(&s, |x| irwin_hall_cdf(n, x * (n as f64).sqrt() + n as f64 / 2.0));
        println!("n={n}: inversion vs Irwin-Hall {:.3e}", kolmogorov_distance(&oracle, &exact).sup);
        let jet = jet_at_zero(&c, 0, n as i64, &[n as i64], &JetOptions { depth: 4, ..JetOptions::default() })?;
        let avg = jet.averages(0, n);
        let m = build_expansion(&avg, jet.lnw_at(n as i64).unwrap(), n, 2)?;
        for d in 0..=2 {
            let g = CdfCurve::from_fn(&s, |x| evaluate_expansion(&m, x, d));
            println!("  order {d}: distance to exact {:.3e}", kolmogorov_distance(&exact, &g).sup);
        }
    }
    Ok(())
}
