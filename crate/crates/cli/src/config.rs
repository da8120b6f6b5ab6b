//! Flat `key = value` experiment files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cpflow_core::constructions::AlphaSpec;
use cpflow_core::Point;

pub const KEYS: &[&str] = &[
    "experiment",
    "fn",
    "gn",
    "a",
    "x0",
    "T",
    "h",
    "depth",
    "alpha",
    "seed",
    "out",
    "probes",
    "probe_half",
    "tol_cp",
    "eps_slope",
    "eps_const",
    "cluster_tol",
    "escape_radius",
];

/// A bad config file, flag or function spec. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    // None for command-line values
    line: Option<usize>,
}

/// Raw values keyed by name, remembering where each came from.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    entries: BTreeMap<String, Entry>,
}

impl Settings {
    /// Parses a config file. Blank lines and lines starting with `#` are
    /// skipped; every other line is `key = value`.
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {n}: expected key = value, got '{line}'"));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return usage(format!("config line {n}: unknown key '{k}'"));
            }
            if v.is_empty() {
                return usage(format!("config line {n}: empty value for '{k}'"));
            }
            if let Some(prev) = s.entries.get(k) {
                return usage(format!(
                    "config line {n}: duplicate key '{k}' (first set on line {})",
                    prev.line.unwrap_or(0)
                ));
            }
            s.entries.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    line: Some(n),
                },
            );
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))
    }

    /// A command-line value; replaces whatever the file said.
    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.entries.insert(
                key.to_string(),
                Entry {
                    value: v.to_string(),
                    line: None,
                },
            );
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn origin(&self, key: &str) -> String {
        match self.entries.get(key).and_then(|e| e.line) {
            Some(n) => format!("config line {n}"),
            None => format!("--{key}"),
        }
    }

    fn typed<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, UsageError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .ok_or_else(|| UsageError(format!("{}: '{v}' is not {what} (key '{key}')", self.origin(key)))),
        }
    }

    pub fn positive(&self, key: &str) -> Result<Option<f64>, UsageError> {
        self.typed(key, "a positive number", |v| {
            v.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
        })
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, UsageError> {
        self.typed(key, "a nonnegative integer", |v| v.parse().ok())
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, UsageError> {
        self.typed(key, "a 64-bit unsigned integer", |v| v.parse().ok())
    }

    pub fn point(&self, key: &str) -> Result<Option<Point>, UsageError> {
        self.typed(key, "a comma-separated list of numbers", |v| {
            parse_list(v).and_then(|c| Point::new(c).ok())
        })
    }

    pub fn alpha(&self, key: &str) -> Result<Option<AlphaSpec>, UsageError> {
        self.typed(key, "an alpha spec (squared, geometric:R or list:a0,a1,...)", parse_alpha)
    }
}

pub fn parse_list(v: &str) -> Option<Vec<f64>> {
    let c: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<_>>()?;
    (!c.is_empty()).then_some(c)
}

/// `squared` is `α_n = 2^{−n²}`; `geometric:R` is `α_n = R^{−n}` with `R > 1`;
/// `list:a0,a1,...` is explicit.
pub fn parse_alpha(v: &str) -> Option<AlphaSpec> {
    let (kind, arg) = v.split_once(':').unwrap_or((v, ""));
    match kind.trim() {
        "squared" if arg.is_empty() => Some(AlphaSpec::SquaredExponent),
        "geometric" => {
            let r: f64 = arg.trim().parse().ok()?;
            (r > 1.0 && r.is_finite()).then(|| AlphaSpec::Geometric { ratio: 1.0 / r })
        }
        "list" => parse_list(arg).map(AlphaSpec::Explicit),
        _ => None,
    }
}

/// Everything one experiment needs, after defaults.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub f: Option<String>,
    pub g: Option<String>,
    pub x0: Option<Point>,
    pub horizon: Option<f64>,
    pub step: f64,
    pub depth: usize,
    pub alpha: AlphaSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub probes: usize,
    pub probe_half: f64,
    pub tol_cp: f64,
    pub eps_slope: f64,
    pub eps_const: f64,
    pub cluster_tol: f64,
    pub escape_radius: f64,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings, experiment: &str) -> Result<Self, UsageError> {
        let mut f = s.raw("fn").map(str::to_string);
        if let (Some(spec), Some(a)) = (f.as_mut(), s.raw("a")) {
            if parse_list(a).is_none() {
                return usage(format!("{}: '{a}' is not a comma-separated list of numbers (key 'a')", s.origin("a")));
            }
            spec.push_str(&format!(";a={a}"));
        }
        Ok(ExperimentConfig {
            experiment: s.raw("experiment").unwrap_or(experiment).to_string(),
            f,
            g: s.raw("gn").map(str::to_string),
            x0: s.point("x0")?,
            horizon: s.positive("T")?,
            step: s.positive("h")?.unwrap_or(0.1),
            depth: s.usize("depth")?.unwrap_or(6),
            alpha: s.alpha("alpha")?.unwrap_or(AlphaSpec::SquaredExponent),
            seed: s.u64("seed")?.unwrap_or(0),
            out: s.raw("out").map_or_else(|| PathBuf::from("cpflow-out"), PathBuf::from),
            probes: s.usize("probes")?.unwrap_or(16),
            probe_half: s.positive("probe_half")?.unwrap_or(2.0),
            tol_cp: s.positive("tol_cp")?.unwrap_or(cpflow_core::asymptotics::TOL_CP),
            eps_slope: s.positive("eps_slope")?.unwrap_or(1e-5),
            eps_const: s.positive("eps_const")?.unwrap_or(1e-6),
            cluster_tol: s.positive("cluster_tol")?.unwrap_or(0.1),
            escape_radius: s.positive("escape_radius")?.unwrap_or(10.0),
        })
    }
}
