//! Sectioned key = value configuration with defaults, strict key checking
//! and an echo of the effective settings.
//!
//! ```text
//! [model]
//! kind = transfer
//! env = iid
//! probs = 0.5, 0.5
//! slopes = 2, 3
//! observable = cos:1,0.5
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::dynamics::{MapFamily, MapKind, ObservablePair, Potential, ScalarField};
use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{FiberModel, Kernel, KernelFamily, MarkovModel, Model, Quadrature, TransferModel};

const DEFAULTS: &[(&str, &str, &str)] = &[
    ("model", "kind", "transfer"),
    ("model", "env", "deterministic"),
    ("model", "probs", "1"),
    ("model", "matrix", "1"),
    ("model", "slopes", "2"),
    ("model", "eps", "0"),
    ("model", "potential", "geometric"),
    ("model", "observable", "cos:1"),
    ("model", "kernels", "cos:0.5"),
    ("model", "alpha", "auto"),
    ("model", "quadrature", "trapezoid"),
    ("model", "center", "false"),
    ("numeric", "grid", "64"),
    ("numeric", "depth", "60"),
    ("numeric", "tol", "1e-12"),
    ("numeric", "radius", "0.05"),
    ("numeric", "nodes", "64"),
    ("numeric", "order", "6"),
    ("numeric", "t_nodes", "1024"),
    ("numeric", "s_points", "801"),
    ("numeric", "s_range", "5"),
    ("numeric", "check_tol", "1e-8"),
    ("experiment", "paths", "5"),
    ("experiment", "fibers", "4"),
    ("experiment", "z", "0; 0.05; 0.05i; 0.0707106781186548+0.0707106781186548i"),
    ("experiment", "n", "200"),
    ("experiment", "n_grid", "50, 100, 200, 400, 800"),
    ("experiment", "k", "2, 3, 4"),
    ("experiment", "d", "1"),
    ("experiment", "mc_samples", "0"),
    ("experiment", "bootstrap", "200"),
    ("experiment", "mc_tol", "inf"),
    ("experiment", "sigma2", "auto"),
    ("experiment", "t", "0.5, 1, 2, 4"),
    ("run", "seed", "1"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            values: DEFAULTS
                .iter()
                .map(|(s, k, v)| ((s.to_string(), k.to_string()), v.to_string()))
                .collect(),
        }
    }
}

impl Config {
    /// Parses text over the defaults. Every unknown key is reported at once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section = String::new();
        let mut unknown = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                section = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: bad section header", lineno + 1)))?
                    .trim()
                    .to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = (section.clone(), k.trim().to_string());
            match cfg.values.get_mut(&key) {
                Some(slot) => *slot = v.trim().to_string(),
                None => unknown.push(format!("[{}] {}", key.0, key.1)),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> &str {
        &self.values[&(section.to_string(), key.to_string())]
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) -> Result<()> {
        match self.values.get_mut(&(section.to_string(), key.to_string())) {
            Some(slot) => {
                *slot = value.into();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown keys: [{section}] {key}"))),
        }
    }

    /// The effective configuration in file syntax, one line per entry.
    pub fn echo(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut last = "";
        for ((s, k), v) in &self.values {
            if s != last {
                out.push(format!("[{s}]"));
                last = s;
            }
            out.push(format!("{k} = {v}"));
        }
        out
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64> {
        parse_f64(self.get(section, key)).map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize> {
        self.get(section, key)
            .parse()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64> {
        self.get(section, key)
            .parse()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool> {
        match self.get(section, key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::Config(format!("[{section}] {key}: not a boolean: {v}"))),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        split_list(self.get(section, key))
            .map(parse_f64)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    pub fn usize_list(&self, section: &str, key: &str) -> Result<Vec<usize>> {
        split_list(self.get(section, key))
            .map(|s| s.parse::<usize>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    /// `;`-separated complex numbers such as `0.05`, `0.05i`, `0.1-0.2i`.
    pub fn complex_list(&self, section: &str, key: &str) -> Result<Vec<C64>> {
        self.get(section, key)
            .split(';')
            .map(|s| parse_complex(s.trim()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
    }

    /// `auto` maps to None.
    pub fn optional_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            "auto" => Ok(None),
            _ => self.f64(section, key).map(Some),
        }
    }

    pub fn model(&self) -> Result<Arc<Model>> {
        build_model(self)
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split([',', ' ']).map(str::trim).filter(|t| !t.is_empty())
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("{t:?}: {e}")),
    }
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let s = s.replace(' ', "");
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not an exponent sign
        let bytes = body.as_bytes();
        let mut cut = None;
        for i in (1..bytes.len()).rev() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                cut = Some(i);
                break;
            }
        }
        let (re, im) = match cut {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            v => v,
        };
        Ok(C64::new(parse_f64(re)?, parse_f64(im)?))
    } else {
        Ok(C64::new(parse_f64(&s)?, 0.0))
    }
}

/// `cos:a1,a2,...`, `sin:b1,...`, `trig:c0|a1,a2|b1,b2`, `const:c`, `zero`,
/// `steps:e1,e2|v1,v2,v3`, `affine:slope,intercept`.
pub fn parse_field(s: &str) -> Result<ScalarField> {
    let s = s.trim();
    let (kind, body) = s.split_once(':').unwrap_or((s, ""));
    let nums = |b: &str| -> Result<Vec<f64>> {
        split_list(b)
            .map(parse_f64)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("field {s:?}: {e}")))
    };
    let parts: Vec<&str> = body.split('|').collect();
    match kind {
        "zero" => Ok(ScalarField::zero()),
        "const" => Ok(ScalarField::Constant(nums(body)?.first().cloned().unwrap_or(0.0))),
        "cos" => Ok(ScalarField::cos(&nums(body)?)),
        "sin" => Ok(ScalarField::Trig {
            c0: 0.0,
            cos: vec![],
            sin: nums(body)?,
        }),
        "trig" if parts.len() == 3 => Ok(ScalarField::Trig {
            c0: nums(parts[0])?.first().cloned().unwrap_or(0.0),
            cos: nums(parts[1])?,
            sin: nums(parts[2])?,
        }),
        "steps" if parts.len() == 2 => {
            let edges = nums(parts[0])?;
            let values = nums(parts[1])?;
            if values.len() != edges.len() + 1 || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("field {s:?}: need increasing edges and one more value than edges")));
            }
            Ok(ScalarField::Steps { edges, values })
        }
        "affine" => match nums(body)?.as_slice() {
            [a, b] => Ok(ScalarField::Affine {
                slope: *a,
                intercept: *b,
            }),
            _ => Err(Error::Config(format!("field {s:?}: affine takes slope,intercept"))),
        },
        _ => Err(Error::Config(format!("unrecognized field {s:?}"))),
    }
}

/// One entry per symbol from a `;`-list, or one entry repeated.
fn per_symbol<T: Clone>(raw: &str, a: usize, what: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = raw.split(';').map(|x| f(x.trim())).collect::<Result<_>>()?;
    match items.len() {
        1 => Ok(vec![items[0].clone(); a]),
        n if n == a => Ok(items),
        n => Err(Error::Config(format!("{what}: {n} entries for {a} symbols"))),
    }
}

fn build_env(cfg: &Config) -> Result<EnvModel> {
    match cfg.get("model", "env") {
        "deterministic" => Ok(EnvModel::deterministic()),
        "iid" => EnvModel::iid(cfg.f64_list("model", "probs")?),
        "markov" => {
            let rows = cfg
                .get("model", "matrix")
                .split(';')
                .map(|r| {
                    split_list(r)
                        .map(parse_f64)
                        .collect::<std::result::Result<Vec<f64>, _>>()
                        .map_err(|e| Error::Config(format!("[model] matrix: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            EnvModel::markov(rows)
        }
        v => Err(Error::Config(format!("[model] env: unknown law {v:?}"))),
    }
}

fn build_model(cfg: &Config) -> Result<Arc<Model>> {
    let env = build_env(cfg)?;
    let a = env.alphabet_size();
    let u = per_symbol(cfg.get("model", "observable"), a, "[model] observable", parse_field)?;
    match cfg.get("model", "kind") {
        "transfer" => {
            let slopes = per_symbol(cfg.get("model", "slopes").replace(',', ";").as_str(), a, "[model] slopes", |s| {
                s.parse::<u32>().map_err(|e| Error::Config(format!("[model] slopes: {e}")))
            })?;
            let eps = per_symbol(cfg.get("model", "eps").replace(',', ";").as_str(), a, "[model] eps", |s| {
                parse_f64(s).map_err(|e| Error::Config(format!("[model] eps: {e}")))
            })?;
            let potential = per_symbol(cfg.get("model", "potential"), a, "[model] potential", |s| match s {
                "geometric" => Ok(Potential::Geometric),
                f => parse_field(f).map(Potential::Field),
            })?;
            let maps = MapFamily::new(
                slopes
                    .iter()
                    .zip(&eps)
                    .map(|(&m, &e)| MapKind { slope: m, eps: e })
                    .collect(),
            )?;
            let mut obs = ObservablePair::geometric(u);
            obs.potential = potential;
            Model::new(
                env,
                FiberModel::Transfer(TransferModel { maps, obs }),
                Some(Grid::circle(cfg.usize("numeric", "grid")?)?),
            )
        }
        "markov" => {
            let kernels = per_symbol(cfg.get("model", "kernels"), a, "[model] kernels", parse_kernel)?;
            let alpha = match cfg.optional_f64("model", "alpha")? {
                Some(v) => v,
                None => {
                    let amax = kernels.iter().map(|k| k.cos.iter().map(|c| c.abs()).sum::<f64>()).fold(0.0, f64::max);
                    (1.0 - amax).min(1.0 / (1.0 + amax))
                }
            };
            let quadrature = match cfg.get("model", "quadrature") {
                "trapezoid" => Quadrature::Trapezoid,
                "gauss-legendre" => Quadrature::GaussLegendre,
                v => return Err(Error::Config(format!("[model] quadrature: unknown rule {v:?}"))),
            };
            Model::new(
                env,
                FiberModel::Markov(MarkovModel {
                    kernels: KernelFamily {
                        kernels,
                        alpha,
                        nodes: cfg.usize("numeric", "grid")?,
                        quadrature,
                    },
                    u,
                }),
                None,
            )
        }
        v => Err(Error::Config(format!("[model] kind: unknown kind {v:?}"))),
    }
}

/// `independent`, or `cos:a1,a2@shift`.
fn parse_kernel(s: &str) -> Result<Kernel> {
    if s == "independent" {
        return Ok(Kernel::independent());
    }
    let body = s
        .strip_prefix("cos:")
        .ok_or_else(|| Error::Config(format!("unrecognized kernel {s:?}")))?;
    let (coefs, shift) = body.split_once('@').unwrap_or((body, "0"));
    let cos = split_list(coefs)
        .map(parse_f64)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("kernel {s:?}: {e}")))?;
    let shift = parse_f64(shift).map_err(|e| Error::Config(format!("kernel {s:?}: {e}")))?;
    Ok(Kernel { cos, shift })
}
