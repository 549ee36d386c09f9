//! Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use quenched::cli::{run, Command, Status};
use quenched::config::Config;
use quenched::dynamics::ScalarField;
use quenched::edgeworth::{
    build_expansion, cdf_via_characteristic, clt_rate_experiment, coefficient_convergence_experiment,
    evaluate_expansion, kolmogorov_distance, order_improvement_experiment, uniform_grid, CdfCurve, ExperimentOptions,
    InversionOptions,
};
use quenched::env::{sample_path, EnvModel};
use quenched::grid::{fiber_norm, NormSpec};
use quenched::moments::{
    cauchy_derivatives, faa_di_bruno_lambda_derivative, jet_at_zero, mc_moment, mc_samples, operator_moments,
    JetOptions, MomentOptions,
};
use quenched::operators::{dense_cocycle, Cocycle, Model};
use quenched::presets;
use quenched::rpf::{dense_eigenvalues, estimate_contraction, nu_sweep, solve_triplet, verify_rpf_identities};
use quenched::stats::{median, power_fit};
use quenched::{Error, C64};

fn verdict(id: u32, pass: bool, detail: String, started: Instant) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id}: {detail} [{:.1} s]", started.elapsed().as_secs_f64());
    assert!(pass, "criterion {id}: {detail}");
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn criterion_01_rpf_identities() {
    let t = Instant::now();
    let n = 256;
    let depth = 80;
    let u = ScalarField::cos(&[1.0]);
    let models: Vec<(&str, Arc<Model>)> = vec![
        ("doubling", presets::doubling(n, u.clone()).unwrap()),
        ("mixed 2/3", presets::mixed23(0.5, presets::cos_pair(0.5), n).unwrap()),
        (
            "Doeblin",
            presets::doeblin_cos(EnvModel::iid(vec![0.5, 0.5]).unwrap(), &[0.5, 0.3], vec![u.clone(), u], n).unwrap(),
        ),
    ];
    let zs = [c(0.0, 0.0), c(0.05, 0.0), c(0.0, 0.05), C64::from_polar(0.1, PI / 4.0)];
    let mut worst: f64 = 0.0;
    for (_, m) in &models {
        for seed in 0..5u64 {
            let path = sample_path(m.env(), 1000 + seed, depth + 8, depth + 8);
            let cy = Cocycle::new(m.clone(), path);
            for &z in &zs {
                let t0 = solve_triplet(&cy, 0, z, depth, 1e-14).unwrap();
                let t1 = solve_triplet(&cy, 1, z, depth, 1e-14).unwrap();
                let r = verify_rpf_identities(&cy, &t0, &t1).unwrap();
                worst = r.iter().fold(worst, |a, &b| a.max(b));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    verdict(
        1,
        worst < 1e-8 && secs < 120.0,
        format!("max residual {worst:.2e} over 3 models x 5 paths x 4 z at N = 256, depth 80"),
        t,
    );
}

/// max over the full Fourier basis of ||A^n e - nu(e) 1|| / ||e|| from dense
/// matrix powers, fitted as C delta^n above the roundoff floor.
fn dense_contraction(cy: &Cocycle, n_max: usize) -> (f64, f64) {
    let grid = cy.grid().clone();
    let m = grid.len();
    let x = grid.nodes().to_vec();
    let w = grid.weights().to_vec();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for k in 0..=m / 2 {
        basis.push(x.iter().map(|&t| c((2.0 * PI * k as f64 * t).cos(), 0.0)).collect());
        if k > 0 && k < m / 2 {
            basis.push(x.iter().map(|&t| c((2.0 * PI * k as f64 * t).sin(), 0.0)).collect());
        }
    }
    let fz = cy.at(c(0.0, 0.0));
    let spec = NormSpec::default();
    let mut pts = Vec::new();
    for n in 1..=n_max {
        let p = dense_cocycle(&fz, 0, n).unwrap();
        let mut r: f64 = 0.0;
        for e in &basis {
            let mean: C64 = e.iter().zip(&w).map(|(a, b)| a * b).sum();
            let v: Vec<C64> = p.apply(e).iter().map(|y| y - mean).collect();
            r = r.max(fiber_norm(&grid, &v, spec) / fiber_norm(&grid, e, spec));
        }
        if r < 1e-11 {
            break;
        }
        pts.push((n as f64, r.ln()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (_, b, r2) = quenched::stats::linear_fit(&xs, &ys);
    (b.exp(), r2)
}

#[test]
fn criterion_02_contraction() {
    let t = Instant::now();
    let m = presets::doubling(256, ScalarField::cos(&[1.0])).unwrap();
    let cy = Cocycle::new(m.clone(), sample_path(m.env(), 0, 100, 100));
    let est = estimate_contraction(&cy, c(0.0, 0.0), 0, 20, 40, NormSpec::default()).unwrap();
    let (dense_delta, dense_r2) = dense_contraction(&cy, 20);
    let eig = dense_eigenvalues(&dense_cocycle(&cy.at(c(0.0, 0.0)), 0, 1).unwrap());
    let lambda2 = eig.get(1).map(|v| v.norm()).unwrap_or(0.0);
    println!(
        "INFO criterion 2: dense second eigenvalue modulus {lambda2:.3e} (the discretized spectrum collapses off constants); \
         dense H1 contraction rate {dense_delta:.4} (R2 {dense_r2:.5})"
    );
    let pass = !est.collapsed && (est.delta - dense_delta).abs() <= 0.05 && est.r2 > 0.99;
    verdict(
        2,
        pass && t.elapsed().as_secs_f64() < 60.0,
        format!(
            "probe delta {:.4} vs dense-oracle rate {dense_delta:.4}, fit R2 {:.5} over n in [{}, {}]",
            est.delta, est.r2, est.fit_range.0, est.fit_range.1
        ),
        t,
    );
}

#[test]
fn criterion_03_known_variance() {
    let t = Instant::now();
    let m = presets::doubling(64, ScalarField::cos(&[1.0])).unwrap();
    let cy = presets::cocycle(&m, 3, 0, 400, 60).unwrap();
    let jet = jet_at_zero(&cy, 0, 200, &[], &JetOptions::default()).unwrap();
    let s2 = jet.average(2, 0, 200).re;
    let n = 100;
    let draws = mc_samples(&cy, n, 1_000_000, 77, 60).unwrap();
    let mc = mc_moment(&draws, 2, n, 200, 78, f64::INFINITY);
    let pass = (s2 - 0.5).abs() < 1e-6 && (mc.value - 0.5).abs() <= 3.0 * mc.se;
    verdict(
        3,
        pass && t.elapsed().as_secs_f64() < 300.0,
        format!(
            "jet sigma2 = {s2:.10}; Monte Carlo gamma_2,{n} = {:.5} (SE {:.5}, {:.2} SE from 0.5)",
            mc.value,
            mc.se,
            (mc.value - 0.5).abs() / mc.se
        ),
        t,
    );
}

#[test]
fn criterion_04_moment_relations() {
    let t = Instant::now();
    let n = 2000;
    let opts = MomentOptions::default();
    let even = presets::mixed23(0.5, ScalarField::cos(&[1.0]), 32).unwrap();
    let cy = presets::cocycle(&even, 4, 0, n + 1, 60).unwrap();
    let g = operator_moments(&cy, &[n], &[2, 4, 6], &opts).unwrap();
    let r4 = g[1][0] / g[0][0].powi(2);
    let r6 = g[2][0] / g[0][0].powi(3);
    let skew = presets::mixed23(0.5, presets::cos_pair(0.5), 32).unwrap();
    let cy = presets::cocycle(&skew, 5, 0, n + 1, 60).unwrap();
    let g = operator_moments(&cy, &[n], &[2, 3, 5], &opts).unwrap();
    let r5 = g[2][0] / (g[0][0] * g[1][0]);
    let pass = (2.9..=3.1).contains(&r4) && (14.0..=16.0).contains(&r6) && (r5 / 10.0 - 1.0).abs() <= 0.1;
    verdict(
        4,
        pass && t.elapsed().as_secs_f64() < 600.0,
        format!("n = {n}: gamma4/gamma2^2 = {r4:.4}, gamma6/gamma2^3 = {r6:.4}, gamma5/(gamma2 gamma3) = {r5:.4}"),
        t,
    );
}

#[test]
fn criterion_05_faa_di_bruno() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    // synthetic jets: lambda_n(z) = exp(n sum_l a_l z^l / l!)
    for seed in 0..3u64 {
        let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut avg = vec![c(0.0, 0.0); 7];
        avg[2] = c(0.5 + 0.5 * next().abs(), 0.0);
        for a in avg.iter_mut().skip(3) {
            *a = c(next(), 0.0);
        }
        let n = 40.0;
        let r = 0.08;
        let m = 64;
        let vals: Vec<C64> = (0..m)
            .map(|j| {
                let z = C64::from_polar(r, 2.0 * PI * j as f64 / m as f64);
                let mut e = c(0.0, 0.0);
                let mut zp = c(1.0, 0.0);
                for (l, a) in avg.iter().enumerate() {
                    e += a * zp / quenched::stats::factorial(l);
                    zp *= z;
                }
                (e * n).exp()
            })
            .collect();
        let d = cauchy_derivatives(&vals, r, 6);
        for j in 2..=6 {
            let f = faa_di_bruno_lambda_derivative(&avg, n, j);
            worst = worst.max((f - d[j]).norm() / d[j].norm());
        }
    }
    // jets of the mixed model against the product of lambdas on 3 paths
    let model = presets::mixed23(0.5, presets::cos_pair(0.5), 32).unwrap();
    for seed in 0..3u64 {
        let n = 60usize;
        let cy = presets::cocycle(&model, 50 + seed, 0, n + 1, 60).unwrap();
        let jet = jet_at_zero(&cy, 0, n as i64, &[], &JetOptions::default()).unwrap();
        let avg = jet.averages(0, n);
        let r = 0.05;
        let m = 64;
        let upper: Vec<C64> = (0..=m / 2)
            .map(|j| {
                let z = C64::from_polar(r, 2.0 * PI * j as f64 / m as f64);
                let sw = nu_sweep(&cy.at(z), 0, n as i64, 60).unwrap();
                sw.lambda.iter().product()
            })
            .collect();
        let vals: Vec<C64> = (0..m).map(|j| if j <= m / 2 { upper[j] } else { upper[m - j].conj() }).collect();
        let d = cauchy_derivatives(&vals, r, 6);
        for j in 2..=6 {
            let f = faa_di_bruno_lambda_derivative(&avg, n as f64, j);
            worst = worst.max((f - d[j]).norm() / d[j].norm());
        }
    }
    verdict(
        5,
        worst < 1e-6 && t.elapsed().as_secs_f64() < 60.0,
        format!("max relative gap between the Faa di Bruno assembly and direct extraction, j <= 6: {worst:.2e}"),
        t,
    );
}

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
fn criterion_06_edgeworth_golden() {
    let t = Instant::now();
    let z = c(0.0, 0.0);
    let golden = build_expansion(&[z, z, c(1.0, 0.0), c(1.0, 0.0)], &[z, z], 100, 1).unwrap();
    let want = [1.0 / 6.0, 0.0, -1.0 / 6.0];
    let golden_err = (0..3).map(|j| (golden.coefficient(1, j) - want[j]).abs()).fold(0.0, f64::max);

    let n = 64;
    let model = presets::irwin_hall(32).unwrap();
    let cy = presets::cocycle(&model, 0, 0, n + 1, 4).unwrap();
    let jet = jet_at_zero(&cy, 0, n as i64, &[n as i64], &JetOptions { depth: 4, ..JetOptions::default() }).unwrap();
    let exp = build_expansion(&jet.averages(0, n), jet.lnw_at(n as i64).unwrap(), n, 2).unwrap();
    let s = uniform_grid(-1.6, 1.6, 1281);
    let exact = CdfCurve::from_fn(&s, |x| irwin_hall_cdf(n, x * (n as f64).sqrt() + n as f64 / 2.0));
    let dist = |k: usize| kolmogorov_distance(&exact, &CdfCurve::from_fn(&s, |x| evaluate_expansion(&exp, x, k))).sup;
    let (d0, d1, d2) = (dist(0), dist(1), dist(2));
    println!(
        "INFO criterion 6: uniform summands have no skewness, so the n^-1/2 polynomial vanishes (distance {d1:.3e} = Gaussian {d0:.3e}); \
         the first correction is the n^-1 term"
    );
    let pass = golden_err < 1e-10 && (d1 - d0).abs() < 1e-12 && d0 / d2 >= 3.0;
    verdict(
        6,
        pass && t.elapsed().as_secs_f64() < 180.0,
        format!("golden (1-s^2)/6 error {golden_err:.1e}; Irwin-Hall n = 64: Gaussian {d0:.3e}, corrected through n^-1 {d2:.3e}, factor {:.1}", d0 / d2),
        t,
    );
}

#[test]
fn criterion_07_order_improvement() {
    let t = Instant::now();
    let m = presets::doubling(64, ScalarField::cos(&[1.0])).unwrap();
    let cy = presets::cocycle(&m, 0, 0, 3300, 60).unwrap();
    let ns = [50, 100, 200, 400, 800, 1600, 3200];
    let r = order_improvement_experiment(&cy, &ns, 1, &ExperimentOptions::default()).unwrap();
    let (g, o1) = (r.slopes[0], r.slopes[1]);
    let pass = (-0.65..=-0.40).contains(&g) && o1 <= -0.9;
    verdict(
        7,
        pass && t.elapsed().as_secs_f64() < 900.0,
        format!("doubling + cos over n = 50..3200: Gaussian slope {g:.3}, order-1 slope {o1:.3}"),
        t,
    );
}

#[test]
fn criterion_08_rates() {
    let t = Instant::now();
    let a = 0.5;
    let sigma2 = (1.0 + a * a) / 2.0 + a * 0.5;
    let model = presets::mixed23(0.5, presets::cos_pair(a), 32).unwrap();
    let ns: Vec<usize> = (0..8).map(|i| 100 << i).collect();
    let opts = MomentOptions::default();
    let nm = *ns.last().unwrap();
    let devs: Vec<Vec<f64>> = (0..61u64)
        .map(|s| {
            let cy = presets::cocycle(&model, 9000 + s, 0, nm + 1, 60).unwrap();
            operator_moments(&cy, &ns, &[2], &opts).unwrap()[0].iter().map(|g| (g - sigma2).abs()).collect()
        })
        .collect();
    let med: Vec<f64> = (0..ns.len()).map(|i| median(&devs.iter().map(|d| d[i]).collect::<Vec<_>>())).collect();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let moment_slope = power_fit(&nf, &med).1;

    let clt_ns = [100, 200, 400, 800, 1600, 3200];
    let cys: Vec<Cocycle> = (0..9u64).map(|s| presets::cocycle(&model, 9000 + s, 0, 3201, 60).unwrap()).collect();
    let eo = ExperimentOptions {
        inversion_nodes: 384,
        ..ExperimentOptions::default()
    };
    let clt = clt_rate_experiment(&cys, &clt_ns, sigma2, &eo).unwrap();

    let det = presets::slopes(EnvModel::deterministic(), &[2], vec![presets::cos_pair(a)], 32).unwrap();
    let cy = presets::cocycle(&det, 0, 0, nm + 1, 60).unwrap();
    let g = operator_moments(&cy, &ns, &[2], &opts).unwrap();
    let det_dev: Vec<f64> = g[0].iter().map(|v| (v - ((1.0 + a * a) / 2.0 + a)).abs()).collect();
    let det_slope = power_fit(&nf, &det_dev).1;

    let pass = (-0.65..=-0.40).contains(&moment_slope) && (-0.65..=-0.40).contains(&clt.exponent) && det_slope <= -0.9;
    verdict(
        8,
        pass && t.elapsed().as_secs_f64() < 900.0,
        format!(
            "i.i.d. slopes: |gamma_2,n - sigma^2| {moment_slope:.3}, CLT distance {:.3}; deterministic control {det_slope:.3}",
            clt.exponent
        ),
        t,
    );
}

#[test]
fn criterion_09_coefficient_convergence() {
    let t = Instant::now();
    let model = presets::mixed23(0.5, presets::cos_pair(0.5), 32).unwrap();
    let ns: Vec<usize> = (1..=40).map(|i| 50 * i).collect();
    let opts = ExperimentOptions::default();
    let cy = presets::cocycle(&model, 21, 2001, 1, 60).unwrap();
    let r = coefficient_convergence_experiment(&cy, &ns, 1, 500, &opts).unwrap();
    let env500 = (500f64).ln() / (500f64).sqrt();
    let mut ok = true;
    let mut detail = Vec::new();
    for (j, (osc, cst)) in r.tail_oscillation.iter().zip(&r.envelope_constant).enumerate() {
        let bound = 10.0 * cst * env500;
        if *cst > 0.0 {
            ok &= *osc < bound;
            detail.push(format!("s^{j}: {osc:.2e} < {bound:.2e}"));
        }
    }
    let det = presets::slopes(EnvModel::deterministic(), &[2], vec![presets::cos_pair(0.5)], 32).unwrap();
    let cy = presets::cocycle(&det, 0, 2001, 1, 60).unwrap();
    let rd = coefficient_convergence_experiment(&cy, &ns, 1, 500, &opts).unwrap();
    let det_osc = rd.tail_oscillation.iter().cloned().fold(0.0, f64::max);
    ok &= det_osc < 1e-9;
    verdict(
        9,
        ok && t.elapsed().as_secs_f64() < 600.0,
        format!("tail oscillation vs 10x envelope: {}; deterministic control {det_osc:.1e}", detail.join(", ")),
        t,
    );
}

#[test]
fn criterion_10_negative_controls() {
    let t = Instant::now();
    let dir = std::env::temp_dir().join(format!("quenched-acceptance-{}", std::process::id()));
    let lattice = Config::parse(
        "[model]\nobservable = steps:0.5|1,-1\n[numeric]\ngrid = 32\n[experiment]\nn_grid = 10, 25, 50, 100, 200\nt = 1, 2, 3.14159265358979, 5\npaths = 2\n",
    )
    .unwrap();
    let out = run(Command::DecayCheck, &lattice, &dir.join("decay"), false).unwrap();
    let stuck = out.checks.iter().any(|c| c.name == "norm decay" && c.status == Status::Fail);
    let refused = matches!(run(Command::Edgeworth, &lattice, &dir.join("edgeworth"), false), Err(Error::Refused(_)));

    let m = presets::doubling(32, ScalarField::zero()).unwrap();
    let cy = presets::cocycle(&m, 0, 0, 401, 60).unwrap();
    let z = c(0.0, 0.0);
    let degenerate = |r: Result<(), Error>| matches!(r, Err(Error::Degenerate(_)));
    let d1 = degenerate(build_expansion(&[z; 6], &[z; 4], 100, 1).map(|_| ()));
    let d2 = degenerate(order_improvement_experiment(&cy, &[100, 200], 1, &ExperimentOptions::default()).map(|_| ()));
    let d3 = degenerate(clt_rate_experiment(std::slice::from_ref(&cy), &[100], 0.0, &ExperimentOptions::default()).map(|_| ()));
    let jet = jet_at_zero(&cy, 0, 100, &[100], &JetOptions::default()).unwrap();
    let d4 = degenerate(build_expansion(&jet.averages(0, 100), jet.lnw_at(100).unwrap(), 100, 1).map(|_| ()));
    let inv = InversionOptions {
        t_max: 40.0,
        t_nodes: 1024,
        depth: 60,
    };
    let step = cdf_via_characteristic(&cy, 0, 100, &[-0.5, -0.1, 0.1, 0.5], 0.0, &inv).unwrap();
    let step_ok = step.f.iter().zip([0.0, 0.0, 1.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-6);
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        10,
        stuck && refused && d1 && d2 && d3 && d4 && step_ok && t.elapsed().as_secs_f64() < 120.0,
        format!(
            "lattice: no decay {stuck}, edgeworth refused {refused}; u = 0: degeneracy errors {}/4, step CDF {step_ok}",
            [d1, d2, d3, d4].iter().filter(|&&b| b).count()
        ),
        t,
    );
}
