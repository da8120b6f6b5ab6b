//! Named convex functions with known asymptotic data, used as oracles.

use std::fmt;
use std::sync::Arc;

use super::functions::{AbsPlusLinear, Affine, MoreauEnvelope, Norm, Quadratic, SeparableSum};
use super::ConvexFn;
use crate::constructions::{build_counterexample, AlphaSpec, FnSpeed, GridOptions, Potential1D};
use crate::error::{Error, Result};
use crate::point::Point;

/// Closed-form flow `(x0, t) ↦ γ_{x0}(t)`.
pub type ClosedFlow = Arc<dyn Fn(&Point, f64) -> Point + Send + Sync>;

/// A catalog function with its Crandall–Pazy direction `p_f`, the infimum of
/// its slope `‖p_f‖`, a point where `p_f` is attained (if any) and, when
/// known, the closed-form flow.
#[derive(Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub f: Arc<dyn ConvexFn>,
    pub cp_direction: Point,
    pub inf_slope: f64,
    pub attained_at: Option<Point>,
    pub flow: Option<ClosedFlow>,
    /// Random starts are drawn from `[−half, half]^d`.
    pub sample_half_width: f64,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("id", &self.id)
            .field("cp_direction", &self.cp_direction)
            .field("inf_slope", &self.inf_slope)
            .field("attained_at", &self.attained_at)
            .field("has_flow", &self.flow.is_some())
            .finish()
    }
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn is_differentiable(&self) -> bool {
        self.f.is_differentiable()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

fn p(v: &[f64]) -> Point {
    Point::from_slice(v).expect("finite literal")
}

// radial flow of the Huber function min_u ‖u‖ + ‖u − x‖²/2
fn huber_flow(x: &Point, t: f64) -> Point {
    let r0 = x.norm();
    if r0 == 0.0 {
        return x.clone();
    }
    let r = if r0 <= 1.0 {
        r0 * (-t).exp()
    } else if t <= r0 - 1.0 {
        r0 - t
    } else {
        (-(t - (r0 - 1.0))).exp()
    };
    x.scale(r / r0)
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CatalogEntry) {
        self.entries.push(entry);
    }

    /// The standard oracle set.
    pub fn standard() -> Result<Self> {
        let mut c = Catalog::new();
        c.push(CatalogEntry {
            id: "quadratic".into(),
            f: Arc::new(Quadratic::centered(2)),
            cp_direction: p(&[0.0, 0.0]),
            inf_slope: 0.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| x.scale((-t).exp()))),
            sample_half_width: 5.0,
        });
        let a = p(&[2.0, 2.0]);
        let a2 = a.clone();
        c.push(CatalogEntry {
            id: "quadratic_shifted".into(),
            f: Arc::new(Quadratic::new(a.clone())),
            cp_direction: p(&[0.0, 0.0]),
            inf_slope: 0.0,
            attained_at: Some(a),
            flow: Some(Arc::new(move |x, t| &a2 + &(x - &a2).scale((-t).exp()))),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "affine".into(),
            f: Arc::new(Affine::new(p(&[1.0, 0.0]), 0.0)),
            cp_direction: p(&[1.0, 0.0]),
            inf_slope: 1.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| x - &p(&[t, 0.0]))),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "norm".into(),
            f: Arc::new(Norm::new(2)),
            cp_direction: p(&[0.0, 0.0]),
            inf_slope: 0.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| {
                let n = x.norm();
                if n <= t {
                    Point::zeros(x.dim())
                } else {
                    x.scale(1.0 - t / n)
                }
            })),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "abs_plus_linear".into(),
            f: Arc::new(AbsPlusLinear),
            cp_direction: p(&[1.0, 0.0]),
            inf_slope: 1.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| {
                p(&[x[0] - t, x[1].signum() * (x[1].abs() - t).max(0.0)])
            })),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "huber".into(),
            f: Arc::new(MoreauEnvelope::new(Arc::new(Norm::new(2)), 1.0)?),
            cp_direction: p(&[0.0, 0.0]),
            inf_slope: 0.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(huber_flow)),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "envelope_abs_plus_linear".into(),
            f: Arc::new(MoreauEnvelope::new(Arc::new(AbsPlusLinear), 1.0)?),
            cp_direction: p(&[1.0, 0.0]),
            inf_slope: 1.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| {
                let y = huber_flow(&p(&[x[1]]), t);
                p(&[x[0] - t, y[0]])
            })),
            sample_half_width: 5.0,
        });
        c.push(CatalogEntry {
            id: "separable_quadratic_linear".into(),
            f: Arc::new(SeparableSum::new(vec![
                Arc::new(Quadratic::centered(1)),
                Arc::new(Affine::new(p(&[1.0]), 0.0)),
            ])?),
            cp_direction: p(&[0.0, 1.0]),
            inf_slope: 1.0,
            attained_at: Some(p(&[0.0, 0.0])),
            flow: Some(Arc::new(|x, t| p(&[x[0] * (-t).exp(), x[1] - t]))),
            sample_half_width: 5.0,
        });
        let pot = Arc::new(reciprocal_potential(100.0)?);
        let final_speed = pot.speed(pot.t_max());
        let pot_flow = pot.clone();
        c.push(CatalogEntry {
            id: "potential_reciprocal".into(),
            f: pot,
            cp_direction: p(&[-final_speed]),
            inf_slope: final_speed,
            attained_at: None,
            flow: Some(Arc::new(move |x, t| p(&[pot_flow.flow(x[0], t)]))),
            sample_half_width: 2.0,
        });
        let ce = Arc::new(build_counterexample(&AlphaSpec::SquaredExponent, 3)?);
        let ce_flow = ce.clone();
        c.push(CatalogEntry {
            id: "counterexample2d".into(),
            cp_direction: ce.truncated_cp_direction(),
            inf_slope: ce.truncated_cp_direction().norm(),
            f: ce,
            attained_at: None,
            flow: Some(Arc::new(move |x, t| ce_flow.exact_flow(x, t))),
            sample_half_width: 2.0,
        });
        for (id, s) in [("line_pos", 1.0), ("line_neg", -1.0)] {
            c.push(CatalogEntry {
                id: id.into(),
                f: Arc::new(Affine::new(p(&[s]), 0.0)),
                cp_direction: p(&[s]),
                inf_slope: 1.0,
                attained_at: Some(p(&[0.0])),
                flow: Some(Arc::new(move |x, t| p(&[x[0] - s * t]))),
                sample_half_width: 5.0,
            });
        }
        Ok(c)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::invalid(format!("unknown catalog id '{id}'")))
    }
}

/// `Φ` for `φ(s) = 1/(1+s)` on `[−½, t_max]`: `Φ(u) = e^{−u} − 1`.
pub fn reciprocal_potential(t_max: f64) -> Result<Potential1D> {
    let opts = GridOptions {
        t_pre: 0.5,
        ..GridOptions::with_t_max(t_max)
    };
    Potential1D::from_speed(Arc::new(FnSpeed::reciprocal()), &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::min_norm_subgrad;

    #[test]
    fn ids_are_unique() {
        let c = Catalog::standard().unwrap();
        let mut ids = c.ids();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
        assert!(c.get("nope").is_err());
    }

    #[test]
    fn attained_directions_match_subgradients() {
        let c = Catalog::standard().unwrap();
        for e in c.entries() {
            assert!((e.cp_direction.norm() - e.inf_slope).abs() < 1e-15, "{}", e.id);
            if let Some(x) = &e.attained_at {
                let g = min_norm_subgrad(e.f.as_ref(), x).unwrap();
                assert!(g.distance(&e.cp_direction) < 1e-12, "{}", e.id);
            }
        }
    }

    #[test]
    fn closed_flows_start_at_start() {
        let c = Catalog::standard().unwrap();
        for e in c.entries() {
            let x = Point::from_slice(&vec![0.7; e.dim()]).unwrap();
            let g = e.flow.as_ref().unwrap();
            assert!(g(&x, 0.0).distance(&x) < 1e-12, "{}", e.id);
        }
    }
}
