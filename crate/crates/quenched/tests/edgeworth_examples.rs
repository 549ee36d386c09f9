use quenched::dynamics::ScalarField;
use quenched::edgeworth::{
    build_expansion, cdf_via_characteristic, clt_rate_experiment, default_t_max, evaluate_expansion, kolmogorov_distance,
    uniform_grid, CdfCurve, ExperimentOptions, InversionOptions,
};
use quenched::moments::{jet_at_zero, mc_samples, JetOptions};
use quenched::presets;
use quenched::stats::normal_pdf;
use quenched::C64;

/// P(U_1 + ... + U_n <= x) by F_m(y) = (y F_{m-1}(y) + (m - y) F_{m-1}(y - 1)) / m.
fn irwin_hall_cdf(n: usize, x: f64) -> f64 {
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

#[test]
fn irwin_hall_inversion() {
    let n = 8;
    let model = presets::irwin_hall(32).unwrap();
    let cy = presets::cocycle(&model, 0, 0, n + 1, 4).unwrap();
    let v = 1.0 / 12.0;
    let opts = InversionOptions {
        t_max: default_t_max(v),
        t_nodes: 1024,
        depth: 4,
    };
    let s = uniform_grid(-1.5, 1.5, 121);
    let got = cdf_via_characteristic(&cy, 0, n, &s, v, &opts).unwrap();
    let root = (n as f64).sqrt();
    for (x, f) in s.iter().zip(&got.f) {
        let exact = irwin_hall_cdf(n, x * root + n as f64 / 2.0);
        assert!((f - exact).abs() < 1e-6, "s = {x}: {f} vs {exact}");
    }
}

#[test]
fn irwin_hall_gaussian_error_has_the_classical_size() {
    let n = 64;
    let model = presets::irwin_hall(32).unwrap();
    let cy = presets::cocycle(&model, 0, 0, n + 1, 4).unwrap();
    let jet = jet_at_zero(&cy, 0, n as i64, &[n as i64], &JetOptions { depth: 4, ..JetOptions::default() }).unwrap();
    let exp = build_expansion(&jet.averages(0, n), jet.lnw_at(n as i64).unwrap(), n, 2).unwrap();
    let s = uniform_grid(-1.6, 1.6, 1281);
    let exact = CdfCurve::from_fn(&s, |x| irwin_hall_cdf(n, x * (n as f64).sqrt() + n as f64 / 2.0));
    let gauss = kolmogorov_distance(&exact, &CdfCurve::from_fn(&s, |x| evaluate_expansion(&exp, x, 0))).sup;
    // leading term: n^{-1} |kappa_4| / 24 sup |He_3 phi|, kappa_4 = -6/5 in standard units
    let peak = uniform_grid(0.0, 4.0, 40001)
        .iter()
        .map(|&x| ((x * x * x - 3.0 * x) * normal_pdf(x)).abs())
        .fold(0.0, f64::max);
    let classical = 1.2 / 24.0 * peak / n as f64;
    assert!((gauss / classical - 1.0).abs() < 0.2, "{gauss} vs {classical}");
}

#[test]
fn doubling_cdf_against_monte_carlo() {
    let n = 200;
    let m = presets::doubling(64, ScalarField::cos(&[1.0])).unwrap();
    let cy = presets::cocycle(&m, 0, 0, n + 1, 60).unwrap();
    let s = uniform_grid(-3.0, 3.0, 241);
    let opts = InversionOptions {
        t_max: default_t_max(0.5),
        t_nodes: 1024,
        depth: 60,
    };
    let oracle = cdf_via_characteristic(&cy, 0, n, &s, 0.5, &opts).unwrap();
    let mut draws = mc_samples(&cy, n, 1_000_000, 2024, 60).unwrap();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let root = (n as f64).sqrt();
    let mut worst: f64 = 0.0;
    for (x, f) in s.iter().zip(&oracle.f) {
        let below = draws.partition_point(|&d| d <= x * root) as f64 / draws.len() as f64;
        worst = worst.max((below - f).abs());
    }
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn first_polynomial_follows_the_jet() {
    let n = 300;
    let m = presets::mixed23(0.5, presets::cos_pair(0.5), 32).unwrap();
    let cy = presets::cocycle(&m, 5, 0, n + 1, 60).unwrap();
    let jet = jet_at_zero(&cy, 0, n as i64, &[n as i64], &JetOptions::default()).unwrap();
    let avg = jet.averages(0, n);
    let zero = vec![C64::new(0.0, 0.0); 4];
    let exp = build_expansion(&avg, &zero, n, 1).unwrap();
    let (v, k3) = (avg[2].re, avg[3].re);
    assert!(k3.abs() > 1e-3);
    assert!((exp.coefficient(1, 2) + k3 / (6.0 * v.powf(2.5))).abs() < 1e-12);
    assert!((exp.coefficient(1, 0) - k3 / (6.0 * v.powf(1.5))).abs() < 1e-12);
    assert!(exp.coefficient(1, 1).abs() < 1e-14);
    assert!((evaluate_expansion(&exp, 10.0, 1) - 1.0).abs() < 1e-12);
}

#[test]
fn deterministic_clt_rate_is_classical() {
    let m = presets::doubling(32, ScalarField::cos(&[1.0])).unwrap();
    let cy = presets::cocycle(&m, 0, 0, 801, 60).unwrap();
    let opts = ExperimentOptions {
        inversion_nodes: 512,
        ..ExperimentOptions::default()
    };
    let r = clt_rate_experiment(&[cy], &[50, 100, 200, 400, 800], 0.5, &opts).unwrap();
    assert!((-0.6..=-0.4).contains(&r.exponent), "{}", r.exponent);
}

#[test]
fn identical_curves_are_at_distance_zero() {
    let s = uniform_grid(-3.0, 3.0, 61);
    let f = CdfCurve::from_fn(&s, quenched::stats::normal_cdf);
    assert_eq!(kolmogorov_distance(&f, &f).sup, 0.0);
}
