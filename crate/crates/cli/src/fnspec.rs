//! Function specs: `id` or `id;key=value;key=value`.

use std::collections::BTreeMap;
use std::sync::Arc;

use cpflow_core::constructions::{build_counterexample, AlphaSpec, Counterexample2D};
use cpflow_core::convex::catalog::reciprocal_potential;
use cpflow_core::convex::{AbsPlusLinear, Affine, MoreauEnvelope, Norm, Quadratic, SeparableSum, Shifted};
use cpflow_core::{Catalog, ConvexFn, Point};

use crate::config::{parse_alpha, parse_list, usage, UsageError};

pub const IDS: &[&str] = &[
    "quadratic",
    "quadratic_shifted",
    "affine",
    "line",
    "line_pos",
    "line_neg",
    "norm",
    "abs_plus_linear",
    "huber",
    "envelope_abs_plus_linear",
    "separable_quadratic_linear",
    "potential_reciprocal",
    "counterexample2d",
];

/// A built function with its known direction, when there is one.
#[derive(Clone, Debug)]
pub struct Built {
    pub label: String,
    pub f: Arc<dyn ConvexFn>,
    pub cp_direction: Option<Point>,
    pub counterexample: Option<Arc<Counterexample2D>>,
}

struct Params {
    spec: String,
    map: BTreeMap<String, String>,
}

impl Params {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, UsageError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => parse_list(&v)
                .map(Some)
                .ok_or_else(|| UsageError(format!("fn '{}': {key}='{v}' is not a list of numbers", self.spec))),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, UsageError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => usage(format!("fn '{}': {key} takes one number", self.spec)),
        }
    }

    fn finish(self) -> Result<(), UsageError> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => usage(format!("fn '{}': parameter '{k}' does not apply", self.spec)),
        }
    }
}

fn point(v: Vec<f64>) -> Point {
    Point::new(v).expect("parse_list yields finite values")
}

fn core_err(spec: &str, e: cpflow_core::Error) -> UsageError {
    UsageError(format!("fn '{spec}': {e}"))
}

/// Parses and builds a function spec. `c` adds a constant to any function.
pub fn build(spec: &str) -> Result<Built, UsageError> {
    let mut parts = spec.split(';');
    let id = parts.next().unwrap_or("").trim().to_string();
    let mut map = BTreeMap::new();
    for kv in parts.filter(|p| !p.trim().is_empty()) {
        let Some((k, v)) = kv.split_once('=') else {
            return usage(format!("fn '{spec}': expected key=value, got '{kv}'"));
        };
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return usage(format!("fn '{spec}': duplicate parameter '{}'", k.trim()));
        }
    }
    let mut p = Params {
        spec: spec.to_string(),
        map,
    };
    let shift = p.number("c")?;
    let mut counterexample = None;
    let (f, cp): (Arc<dyn ConvexFn>, Option<Point>) = match id.as_str() {
        "quadratic" => {
            let center = p.list("a")?.unwrap_or(vec![0.0, 0.0]);
            let d = center.len();
            (Arc::new(Quadratic::new(point(center))), Some(Point::zeros(d)))
        }
        "affine" | "line" => {
            let slope = p.list("a")?.unwrap_or(if id == "line" { vec![1.0] } else { vec![1.0, 0.0] });
            let s = point(slope);
            (Arc::new(Affine::new(s.clone(), 0.0)), Some(s))
        }
        "norm" => {
            let d = p.number("dim")?.unwrap_or(2.0);
            if !(d >= 1.0 && d.fract() == 0.0) {
                return usage(format!("fn '{spec}': dim must be a positive integer"));
            }
            (Arc::new(Norm::new(d as usize)), Some(Point::zeros(d as usize)))
        }
        "huber" | "envelope_abs_plus_linear" => {
            let mu = p.number("mu")?.unwrap_or(1.0);
            let (inner, cp): (Arc<dyn ConvexFn>, _) = if id == "huber" {
                (Arc::new(Norm::new(2)), point(vec![0.0, 0.0]))
            } else {
                (Arc::new(AbsPlusLinear), point(vec![1.0, 0.0]))
            };
            let env = MoreauEnvelope::new(inner, mu).map_err(|e| core_err(spec, e))?;
            (Arc::new(env), Some(cp))
        }
        "separable_quadratic_linear" => {
            let f = SeparableSum::new(vec![
                Arc::new(Quadratic::centered(1)),
                Arc::new(Affine::new(point(vec![1.0]), 0.0)),
            ])
            .map_err(|e| core_err(spec, e))?;
            (Arc::new(f), Some(point(vec![0.0, 1.0])))
        }
        "abs_plus_linear" => (Arc::new(AbsPlusLinear), Some(point(vec![1.0, 0.0]))),
        "potential_reciprocal" => {
            let t_max = p.number("t_max")?.unwrap_or(100.0);
            let pot = reciprocal_potential(t_max).map_err(|e| core_err(spec, e))?;
            let cp = point(vec![-pot.speed(t_max)]);
            (Arc::new(pot), Some(cp))
        }
        "counterexample2d" => {
            let depth = p.number("depth")?.unwrap_or(3.0);
            if !(depth >= 0.0 && depth.fract() == 0.0) {
                return usage(format!("fn '{spec}': depth must be a nonnegative integer"));
            }
            let alpha = match p.take("alpha") {
                None => AlphaSpec::SquaredExponent,
                Some(v) => parse_alpha(&v).ok_or_else(|| UsageError(format!("fn '{spec}': bad alpha '{v}'")))?,
            };
            let ce = Arc::new(build_counterexample(&alpha, depth as usize).map_err(|e| core_err(spec, e))?);
            counterexample = Some(ce.clone());
            let cp = ce.truncated_cp_direction();
            (ce, Some(cp))
        }
        "quadratic_shifted" | "line_pos" | "line_neg" => {
            let cat = Catalog::standard().map_err(|e| core_err(spec, e))?;
            let e = cat.get(&id).map_err(|e| core_err(spec, e))?;
            (e.f.clone(), Some(e.cp_direction.clone()))
        }
        _ => {
            return usage(format!("unknown function id '{id}' (known: {})", IDS.join(", ")));
        }
    };
    p.finish()?;
    let f = match shift {
        Some(c) => Arc::new(Shifted::new(f, c)) as Arc<dyn ConvexFn>,
        None => f,
    };
    Ok(Built {
        label: spec.to_string(),
        f,
        cp_direction: cp,
        counterexample,
    })
}
