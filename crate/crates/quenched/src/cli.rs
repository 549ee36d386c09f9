//! Subcommands behind the `quenched` binary. Each writes CSV files and a
//! `summary.txt` with one PASS/FAIL/INFO line per check into the output
//! directory, every file headed by the effective configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::config::Config;
use crate::edgeworth::{
    clt_rate_experiment, coefficient_convergence_experiment, evaluate_expansion, order_improvement_experiment,
    ExperimentOptions,
};
use crate::env::sample_path;
use crate::error::{Error, Result};
use crate::grid::NormSpec;
use crate::moments::{
    asymptotic_moment, jet_at_zero, mc_moment, mc_samples, moment_rate_experiment, operator_moments, JetOptions,
    MomentOptions,
};
use crate::operators::{norm_estimate, Cocycle, Model};
use crate::presets;
use crate::report::{num, Cell, CsvWriter};
use crate::rpf::{estimate_contraction, solve_triplet, verify_rpf_identities};
use crate::stats::factorial;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RpfCheck,
    Moments,
    Rates,
    Edgeworth,
    CltRate,
    DecayCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RpfCheck => "rpf-check",
            Command::Moments => "moments",
            Command::Rates => "rates",
            Command::Edgeworth => "edgeworth",
            Command::CltRate => "clt-rate",
            Command::DecayCheck => "decay-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub status: Status,
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    fn push(&mut self, status: Status, name: &str, detail: String) {
        self.checks.push(Check {
            status,
            name: name.to_string(),
            detail,
        });
    }

    fn check(&mut self, pass: bool, name: &str, detail: String) {
        self.push(if pass { Status::Pass } else { Status::Fail }, name, detail);
    }
}

struct Ctx<'a> {
    cfg: &'a Config,
    out: &'a Path,
    header: Vec<String>,
    verbose: bool,
    outcome: Outcome,
}

impl Ctx<'_> {
    fn csv(&mut self, name: &str, columns: &[&str]) -> Result<CsvWriter> {
        let path = self.out.join(name);
        self.outcome.files.push(path.clone());
        CsvWriter::create(&path, &self.header, columns)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Runs one subcommand. Errors (bad config, refused experiment, numerical
/// failure) are written to the summary as a FAIL line and returned.
pub fn run(command: Command, cfg: &Config, out: &Path, verbose: bool) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let mut header = vec![format!("command = {}", command.name())];
    header.extend(cfg.echo());
    let mut ctx = Ctx {
        cfg,
        out,
        header,
        verbose,
        outcome: Outcome::default(),
    };
    let result = match command {
        Command::RpfCheck => rpf_check(&mut ctx),
        Command::Moments => moments(&mut ctx),
        Command::Rates => rates(&mut ctx),
        Command::Edgeworth => edgeworth(&mut ctx),
        Command::CltRate => clt_rate(&mut ctx),
        Command::DecayCheck => decay_check(&mut ctx),
    };
    if let Err(e) = &result {
        ctx.outcome.push(Status::Fail, command.name(), e.to_string());
    }
    write_summary(&ctx)?;
    result.map(|_| ctx.outcome)
}

fn write_summary(ctx: &Ctx) -> Result<()> {
    let mut text = String::new();
    for h in &ctx.header {
        text.push_str(&format!("# {h}\n"));
    }
    for c in &ctx.outcome.checks {
        text.push_str(&format!("{} {}: {}\n", c.status.tag(), c.name, c.detail));
    }
    fs::write(ctx.out.join("summary.txt"), text)?;
    Ok(())
}

fn model(cfg: &Config) -> Result<Arc<Model>> {
    let m = cfg.model()?;
    if cfg.bool("model", "center")? {
        presets::centered(&m, cfg.u64("run", "seed")?, 400, cfg.usize("numeric", "depth")?)
    } else {
        Ok(m)
    }
}

fn jet_options(cfg: &Config) -> Result<JetOptions> {
    Ok(JetOptions {
        order: cfg.usize("numeric", "order")?,
        radius: cfg.f64("numeric", "radius")?,
        nodes: cfg.usize("numeric", "nodes")?,
        depth: cfg.usize("numeric", "depth")?,
        check_radius: true,
    })
}

fn moment_options(cfg: &Config) -> Result<MomentOptions> {
    Ok(MomentOptions {
        radius: cfg.f64("numeric", "radius")?,
        nodes: cfg.usize("numeric", "nodes")?,
        depth: cfg.usize("numeric", "depth")?,
    })
}

fn experiment_options(cfg: &Config) -> Result<ExperimentOptions> {
    let mut jet = jet_options(cfg)?;
    jet.check_radius = false;
    Ok(ExperimentOptions {
        n_grid: cfg.usize("numeric", "grid")?,
        jet,
        inversion_nodes: cfg.usize("numeric", "t_nodes")?,
        s_range: cfg.f64("numeric", "s_range")?,
        s_points: cfg.usize("numeric", "s_points")?,
        ..ExperimentOptions::default()
    })
}

fn seeds(cfg: &Config) -> Result<Vec<u64>> {
    let s = cfg.u64("run", "seed")?;
    Ok((0..cfg.usize("experiment", "paths")? as u64).map(|p| s.wrapping_add(p)).collect())
}

fn n_max(ns: &[usize]) -> Result<usize> {
    ns.iter().copied().max().ok_or_else(|| Error::Config("[experiment] n_grid is empty".into()))
}

fn rpf_check(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let depth = cfg.usize("numeric", "depth")?;
    let tol = cfg.f64("numeric", "tol")?;
    let check_tol = cfg.f64("numeric", "check_tol")?;
    let fibers = cfg.usize("experiment", "fibers")?;
    let zs = cfg.complex_list("experiment", "z")?;
    let mut w = ctx.csv(
        "rpf_residuals.csv",
        &["seed", "z_re", "z_im", "fiber", "lambda_re", "lambda_im", "r_h", "r_nu", "r_pair"],
    )?;
    let mut worst: f64 = 0.0;
    for seed in seeds(cfg)? {
        let m = depth + 2;
        let path = sample_path(model.env(), seed, m + fibers, m + fibers);
        let c = Cocycle::new(model.clone(), path);
        for &z in &zs {
            for f in 0..fibers as i64 {
                let t0 = solve_triplet(&c, f, z, depth, tol)?;
                let t1 = solve_triplet(&c, f + 1, z, depth, tol)?;
                let r = verify_rpf_identities(&c, &t0, &t1)?;
                worst = worst.max(r.iter().cloned().fold(0.0, f64::max));
                w.row(&[
                    Cell::I(seed as i64),
                    Cell::F(z.re),
                    Cell::F(z.im),
                    Cell::I(f),
                    Cell::F(t0.lambda.re),
                    Cell::F(t0.lambda.im),
                    Cell::F(r[0]),
                    Cell::F(r[1]),
                    Cell::F(r[2]),
                ])?;
            }
        }
        ctx.log(format!("seed {seed}: worst residual so far {worst:e}"));
    }
    w.finish()?;
    ctx.outcome
        .check(worst < check_tol, "rpf identities", format!("max residual {} (bound {})", num(worst), num(check_tol)));

    let seed = cfg.u64("run", "seed")?;
    let c = Cocycle::new(model.clone(), sample_path(model.env(), seed, 2 * depth + 40, 2 * depth + 40));
    let est = estimate_contraction(&c, C64::new(0.0, 0.0), 0, 30, depth, NormSpec::default())?;
    let mut w = ctx.csv("contraction.csv", &["n", "residual"])?;
    for (n, r) in est.residuals.iter().enumerate() {
        w.row(&[Cell::I(n as i64), Cell::F(*r)])?;
    }
    w.finish()?;
    ctx.outcome.push(
        Status::Info,
        "contraction",
        format!(
            "C = {} delta = {} R2 = {} fit n in [{}, {}]{}",
            num(est.c),
            num(est.delta),
            num(est.r2),
            est.fit_range.0,
            est.fit_range.1,
            if est.collapsed { " (collapsed to roundoff)" } else { "" }
        ),
    );
    Ok(())
}

fn predicted(avg: &[C64], lnw: &[C64], k: usize, n: usize) -> Result<f64> {
    if k < 2 {
        Ok(0.0)
    } else {
        Ok(asymptotic_moment(avg, lnw, k, n)?.limit)
    }
}

fn moments(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let ns = cfg.usize_list("experiment", "n_grid")?;
    let ks = cfg.usize_list("experiment", "k")?;
    let nm = n_max(&ns)?;
    let jo = jet_options(cfg)?;
    let mo = moment_options(cfg)?;
    let seed = cfg.u64("run", "seed")?;
    let c = presets::cocycle(&model, seed, 0, nm + 1, jo.depth)?;
    let ends: Vec<i64> = ns.iter().map(|&n| n as i64).collect();
    let jet = jet_at_zero(&c, 0, nm as i64, &ends, &jo)?;
    let ops = operator_moments(&c, &ns, &ks, &mo)?;
    let samples = cfg.usize("experiment", "mc_samples")?;
    let boot = cfg.usize("experiment", "bootstrap")?;
    let mc_tol = cfg.f64("experiment", "mc_tol")?;
    let mut w = ctx.csv(
        "moments.csv",
        &["k", "n", "gamma_kn_operator", "gamma_kn_mc", "mc_ci_lo", "mc_ci_hi", "gamma_k_pred"],
    )?;
    let mut corrections = if ctx.verbose {
        Some(ctx.csv("moment_corrections.csv", &["k", "n", "s", "coefficient"])?)
    } else {
        None
    };
    let mut route_ok = true;
    let mut inconclusive = 0;
    let mut max_mean: f64 = 0.0;
    for (ni, &n) in ns.iter().enumerate() {
        let avg = jet.averages(0, n);
        let lnw = jet.lnw_at(n as i64).unwrap_or(&[]).to_vec();
        max_mean = max_mean.max(avg[1].norm());
        let draws = if samples > 0 {
            Some(mc_samples(&c, n, samples, seed, jo.depth)?)
        } else {
            None
        };
        for (ki, &k) in ks.iter().enumerate() {
            let op = ops[ki][ni];
            let mc = draws.as_ref().map(|d| mc_moment(d, k, n, boot, seed, mc_tol));
            if let Some(m) = mc {
                if m.inconclusive {
                    inconclusive += 1;
                } else if k <= 4 && n <= 500 && (op - m.value).abs() > 3.0 * m.se {
                    route_ok = false;
                }
            }
            let pred = predicted(&avg, &lnw, k, n)?;
            w.row(&[
                Cell::I(k as i64),
                Cell::I(n as i64),
                Cell::F(op),
                Cell::F(mc.map_or(f64::NAN, |m| m.value)),
                Cell::F(mc.map_or(f64::NAN, |m| m.ci_lo)),
                Cell::F(mc.map_or(f64::NAN, |m| m.ci_hi)),
                Cell::F(pred),
            ])?;
            if let Some(cw) = corrections.as_mut() {
                if k >= 2 {
                    let am = asymptotic_moment(&avg, &lnw, k, n)?;
                    for (s, v) in am.corrections.iter().enumerate() {
                        cw.row(&[Cell::I(k as i64), Cell::I(n as i64), Cell::I(s as i64), Cell::F(*v)])?;
                    }
                }
            }
        }
    }
    w.finish()?;
    if let Some(cw) = corrections {
        cw.finish()?;
    }
    ctx.outcome.check(
        max_mean <= 1e-8,
        "centering",
        format!("max |mean Pi'(0)| = {}", num(max_mean)),
    );
    let p2 = jet.averages(0, nm)[2];
    ctx.outcome.check(
        p2.re >= -1e-8 && p2.im.abs() <= 1e-8,
        "second pressure derivative",
        format!("mean Pi''(0) = {} {:+e}i", num(p2.re), p2.im),
    );
    if samples > 0 {
        ctx.outcome.check(route_ok, "route equivalence", "operator vs Monte Carlo within 3 bootstrap SE for k <= 4, n <= 500".into());
        if inconclusive > 0 {
            ctx.outcome.push(
                Status::Info,
                "monte carlo",
                format!("{inconclusive} estimates inconclusive: bootstrap interval wider than {}", num(mc_tol)),
            );
        }
    }
    let s2 = p2.re;
    if s2 > 1e-12 {
        let i = ns.len() - 1;
        let find = |k: usize| ks.iter().position(|&x| x == k).map(|j| ops[j][i]);
        if let (Some(g2), Some(g4)) = (find(2), find(4)) {
            ctx.outcome.push(Status::Info, "relation k=4", format!("gamma4/gamma2^2 = {} at n = {nm}", num(g4 / (g2 * g2))));
        }
        if let (Some(g2), Some(g6)) = (find(2), find(6)) {
            ctx.outcome.push(Status::Info, "relation k=6", format!("gamma6/gamma2^3 = {} at n = {nm}", num(g6 / g2.powi(3))));
        }
    }
    Ok(())
}

/// sigma^2 and zeta from the configuration or, when `auto`, as the path
/// average of the pressure jets over a long window.
fn sigma2_zeta(ctx: &Ctx, model: &Arc<Model>, window: usize) -> Result<(f64, f64)> {
    let cfg = ctx.cfg;
    let given = cfg.optional_f64("experiment", "sigma2")?;
    let mut jo = jet_options(cfg)?;
    jo.order = 3;
    jo.nodes = 16;
    jo.check_radius = false;
    let seed = cfg.u64("run", "seed")?.wrapping_add(0x5157);
    let c = presets::cocycle(model, seed, 0, window, jo.depth)?;
    let jet = jet_at_zero(&c, 0, window as i64, &[], &jo)?;
    let avg = jet.averages(0, window);
    Ok((given.unwrap_or(avg[2].re), avg[3].re))
}

fn rates(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let ns = cfg.usize_list("experiment", "n_grid")?;
    let ks = cfg.usize_list("experiment", "k")?;
    let nm = n_max(&ns)?;
    let mo = moment_options(cfg)?;
    let (s2, zeta) = sigma2_zeta(ctx, &model, 8 * nm)?;
    ctx.outcome.push(Status::Info, "limits", format!("sigma2 = {} zeta = {}", num(s2), num(zeta)));
    let cocycles: Vec<Cocycle> = seeds(cfg)?
        .into_iter()
        .map(|s| presets::cocycle(&model, s, 0, nm + 1, mo.depth))
        .collect::<Result<_>>()?;
    let mut w = ctx.csv("rates.csv", &["k", "n", "path", "deviation", "median"])?;
    for &k in &ks {
        if k < 2 {
            continue;
        }
        let limit = if k % 2 == 0 {
            factorial(k) / (2f64.powf(k as f64 / 2.0) * factorial(k / 2)) * s2.powi(k as i32 / 2)
        } else {
            factorial(k) / 6.0 / (2f64.powf((k - 3) as f64 / 2.0) * factorial((k - 3) / 2)) * s2.powi((k as i32 - 3) / 2) * zeta
        };
        let r = moment_rate_experiment(&cocycles, k, &ns, limit, &mo)?;
        for (i, &n) in ns.iter().enumerate() {
            for (p, dev) in r.per_path.iter().enumerate() {
                w.row(&[Cell::I(k as i64), Cell::I(n as i64), Cell::I(p as i64), Cell::F(dev[i]), Cell::F(r.median[i])])?;
            }
        }
        ctx.outcome.push(
            Status::Info,
            &format!("rate k={k}"),
            format!(
                "median deviation ~ {} n^{} (R2 {}), envelope max median / (n^-1/2 ln n) = {}",
                num(r.constant),
                num(r.exponent),
                num(r.r2),
                num(r.envelope)
            ),
        );
    }
    w.finish()?;
    Ok(())
}

fn edgeworth(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let ns = cfg.usize_list("experiment", "n_grid")?;
    let d = cfg.usize("experiment", "d")?;
    let nm = n_max(&ns)?;
    let opts = experiment_options(cfg)?;
    let seed = cfg.u64("run", "seed")?;
    let c = presets::cocycle(&model, seed, nm + 1, nm + 1, opts.jet.depth)?;
    let report = order_improvement_experiment(&c, &ns, d, &opts)?;
    let mut cols = vec!["n".to_string(), "variance".to_string(), "dist_gauss".to_string()];
    cols.extend((1..=d).map(|k| format!("dist_order_{k}")));
    cols.extend(["gap_bound", "band_1", "band_2", "band_3", "clipped_fraction"].map(String::from));
    let refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut w = ctx.csv("edgeworth.csv", &refs)?;
    for r in &report.rows {
        let mut cells = vec![Cell::I(r.n as i64), Cell::F(r.variance)];
        cells.extend(r.distances.iter().map(|&x| Cell::F(x)));
        cells.push(Cell::F(r.gap_bound));
        cells.extend(r.bands.iter().map(|&x| Cell::F(x)));
        cells.push(Cell::F(r.clipped));
        w.row(&cells)?;
    }
    w.finish()?;
    if let Some(last) = report.rows.last() {
        let mut cols = vec!["s".to_string(), "F_oracle".to_string(), "F_gauss".to_string()];
        cols.extend((1..=d).map(|k| format!("F_edgeworth_{k}")));
        let refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
        let mut w = ctx.csv("cdf.csv", &refs)?;
        for (s, f) in last.oracle.s.iter().zip(&last.oracle.f) {
            let mut cells = vec![Cell::F(*s), Cell::F(*f)];
            cells.extend((0..=d).map(|k| Cell::F(evaluate_expansion(&last.model, *s, k))));
            w.row(&cells)?;
        }
        w.finish()?;
    }
    let slopes: Vec<String> = report.slopes.iter().map(|s| num(*s)).collect();
    ctx.outcome.check(
        report.pass,
        "order improvement",
        format!("log-log slopes by order 0..={d}: {}", slopes.join(" ")),
    );

    let coef = coefficient_convergence_experiment(&c, &ns, 1, ns[ns.len() / 2], &opts)?;
    let mut w = ctx.csv("coefficients.csv", &["n", "j", "coefficient"])?;
    for (n, cs) in coef.ns.iter().zip(&coef.coefficients) {
        for (j, v) in cs.iter().enumerate() {
            w.row(&[Cell::I(*n as i64), Cell::I(j as i64), Cell::F(*v)])?;
        }
    }
    w.finish()?;
    for (j, (osc, env)) in coef.tail_oscillation.iter().zip(&coef.envelope_constant).enumerate() {
        ctx.outcome.push(
            Status::Info,
            &format!("coefficient s^{j} of P_1"),
            format!("tail oscillation {} for n >= {}, envelope constant {}", num(*osc), coef.tail_from, num(*env)),
        );
    }
    Ok(())
}

fn clt_rate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let ns = cfg.usize_list("experiment", "n_grid")?;
    let nm = n_max(&ns)?;
    let opts = experiment_options(cfg)?;
    let (s2, _) = sigma2_zeta(ctx, &model, 8 * nm)?;
    let cocycles: Vec<Cocycle> = seeds(cfg)?
        .into_iter()
        .map(|s| presets::cocycle(&model, s, 0, nm + 1, opts.jet.depth))
        .collect::<Result<_>>()?;
    let r = clt_rate_experiment(&cocycles, &ns, s2, &opts)?;
    let mut w = ctx.csv("clt_rate.csv", &["n", "path", "distance", "median"])?;
    for (i, &n) in ns.iter().enumerate() {
        for (p, d) in r.per_path.iter().enumerate() {
            w.row(&[Cell::I(n as i64), Cell::I(p as i64), Cell::F(d[i]), Cell::F(r.median[i])])?;
        }
    }
    w.finish()?;
    ctx.outcome.push(
        Status::Info,
        "clt rate",
        format!(
            "sigma2 = {}: median distance ~ {} n^{} (R2 {}), envelope {}",
            num(s2),
            num(r.constant),
            num(r.exponent),
            num(r.r2),
            num(r.envelope)
        ),
    );
    Ok(())
}

fn decay_check(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let model = model(cfg)?;
    let ns = cfg.usize_list("experiment", "n_grid")?;
    let ts = cfg.f64_list("experiment", "t")?;
    let nm = n_max(&ns)?;
    let depth = cfg.usize("numeric", "depth")?;
    let mut w = ctx.csv("decay.csv", &["seed", "n", "t", "estimate"])?;
    let mut stuck: Vec<f64> = Vec::new();
    let mut jitter_ok = true;
    for seed in seeds(cfg)? {
        let c = presets::cocycle(&model, seed, 0, nm + 1, depth)?;
        let mut table = Vec::with_capacity(ns.len());
        for &n in &ns {
            let est = norm_estimate(&c, 0, n, &ts, NormSpec::default())?;
            for (t, e) in ts.iter().zip(&est) {
                w.row(&[Cell::I(seed as i64), Cell::I(n as i64), Cell::F(*t), Cell::F(*e)])?;
            }
            table.push(est);
        }
        for (j, &t) in ts.iter().enumerate() {
            let col: Vec<f64> = table.iter().map(|r| r[j]).collect();
            if col.iter().all(|&e| e > 0.9) && !stuck.contains(&t) {
                stuck.push(t);
            }
            if col.windows(2).any(|p| p[1] > 1.1 * p[0]) {
                jitter_ok = false;
            }
        }
    }
    w.finish()?;
    ctx.outcome.check(
        stuck.is_empty(),
        "norm decay",
        if stuck.is_empty() {
            format!("estimates fall below 0.9 by n = {nm} at every t")
        } else {
            format!("no decay (estimate > 0.9 for every n) at t = {stuck:?}")
        },
    );
    ctx.outcome.check(jitter_ok, "monotone decay", "successive estimates within 10% jitter".into());
    Ok(())
}
