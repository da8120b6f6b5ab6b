use nalgebra::{DMatrix, DVector};

use super::potential::Potential1D;
use super::profile::{build_profile, AlphaSpec, Schedule, SchedulePolicy};
use crate::convex::{ConvexFn, ProxOutput};
use crate::error::Result;
use crate::flow::{integrate_flow, FlowConfig, StepPolicy, Trajectory};
use crate::point::Point;

/// Planar convex function `f(x, y) = Φ(x) + Ψ(y)` built from the paired
/// profiles of a [`Schedule`]. Its flow from the origin is
/// `γ(t) = (r_φ(t), r_ψ(t))` with velocity `(φ(t), ψ(t))`.
///
/// The speeds tend to zero along the schedule while the integral ratio
/// alternates between large and small, so the normalised secants of the
/// flow swing between the two axes.
#[derive(Debug)]
pub struct Counterexample2D {
    schedule: Schedule,
    phi: Potential1D,
    psi: Potential1D,
}

/// Time grid used to integrate the counterexample flow.
#[derive(Clone, Debug)]
pub struct CheckpointOptions {
    /// Uniform step on `[0, uniform_until]`.
    pub uniform_step: f64,
    pub uniform_until: f64,
    /// Log-spaced points per decade after `uniform_until`.
    pub per_decade: usize,
    /// Uniform sub-steps inside every blend window.
    pub blend_substeps: usize,
}

impl Default for CheckpointOptions {
    fn default() -> Self {
        CheckpointOptions {
            uniform_step: 0.05,
            uniform_until: 10.0,
            per_decade: 50,
            blend_substeps: 32,
        }
    }
}

impl Counterexample2D {
    /// Wraps a schedule; both potentials are represented up to twice the
    /// schedule horizon and extended affinely beyond.
    pub fn new(schedule: Schedule) -> Result<Self> {
        let t_max = 2.0 * schedule.horizon();
        let phi = Potential1D::from_profile(schedule.phi.clone(), t_max, t_max)?;
        let psi = Potential1D::from_profile(schedule.psi.clone(), t_max, t_max)?;
        Ok(Counterexample2D { schedule, phi, psi })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn phi(&self) -> &Potential1D {
        &self.phi
    }

    pub fn psi(&self) -> &Potential1D {
        &self.psi
    }

    pub fn depth(&self) -> usize {
        self.schedule.depth()
    }

    pub fn horizon(&self) -> f64 {
        self.schedule.horizon()
    }

    /// Exact flow `(r_φ(t), r_ψ(t))` from the origin.
    pub fn exact_flow_from_origin(&self, t: f64) -> Point {
        Point::raw(DVector::from_vec(vec![self.phi.flow(0.0, t), self.psi.flow(0.0, t)]))
    }

    /// Exact flow from any start (the function is separable).
    pub fn exact_flow(&self, x0: &Point, t: f64) -> Point {
        Point::raw(DVector::from_vec(vec![
            self.phi.flow(x0[0], t),
            self.psi.flow(x0[1], t),
        ]))
    }

    /// Crandall–Pazy direction of the represented function: the extension
    /// freezes both speeds at their final levels.
    pub fn truncated_cp_direction(&self) -> Point {
        Point::raw(DVector::from_vec(vec![
            -self.schedule.phi.final_level(),
            -self.schedule.psi.final_level(),
        ]))
    }

    /// Sorted time grid reaching `horizon`: uniform near zero, log-spaced
    /// after, and refined on every blend window that `f64` can resolve.
    pub fn checkpoints(&self, horizon: f64, opts: &CheckpointOptions) -> Vec<f64> {
        let mut ts = Vec::new();
        let until = opts.uniform_until.min(horizon);
        let n_uniform = (until / opts.uniform_step).ceil() as usize;
        for k in 0..=n_uniform {
            ts.push((k as f64 * opts.uniform_step).min(until));
        }
        if horizon > until && until > 0.0 {
            let decades = (horizon / until).log10();
            let n_log = (decades * opts.per_decade as f64).ceil().max(1.0) as usize;
            for k in 1..=n_log {
                ts.push(until * 10f64.powf(decades * k as f64 / n_log as f64));
            }
        }
        let mut starts = self.schedule.phi.blend_starts();
        starts.extend(self.schedule.psi.blend_starts());
        for c in starts {
            if c + 1.0 == c {
                continue;
            }
            for j in 0..=opts.blend_substeps {
                ts.push(c + j as f64 / opts.blend_substeps as f64);
            }
        }
        ts.push(horizon);
        ts.retain(|t| *t >= 0.0 && *t <= horizon);
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup();
        ts
    }

    /// Flow configuration on [`checkpoints`](Self::checkpoints) up to the
    /// schedule horizon.
    pub fn flow_config(&self, opts: &CheckpointOptions) -> FlowConfig {
        let horizon = self.horizon();
        let grid = self.checkpoints(horizon, opts);
        let step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        FlowConfig {
            step,
            horizon,
            policy: StepPolicy::Grid(grid),
            ..FlowConfig::default()
        }
    }
}

impl ConvexFn for Counterexample2D {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Point) -> f64 {
        self.phi.value(&Point::raw(DVector::from_element(1, x[0])))
            + self.psi.value(&Point::raw(DVector::from_element(1, x[1])))
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let a = self.phi.prox(&Point::raw(DVector::from_element(1, x[0])), step)?;
        let b = self.psi.prox(&Point::raw(DVector::from_element(1, x[1])), step)?;
        Ok(ProxOutput {
            point: Point::raw(DVector::from_vec(vec![a.point[0], b.point[0]])),
            residual: a.residual.max(b.residual),
        })
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let a = self.phi.min_subgrad(&Point::raw(DVector::from_element(1, x[0])))?;
        let b = self.psi.min_subgrad(&Point::raw(DVector::from_element(1, x[1])))?;
        Some(Point::raw(DVector::from_vec(vec![a[0], b[0]])))
    }

    fn hessian(&self, x: &Point) -> Option<DMatrix<f64>> {
        let a = self.phi.hessian(&Point::raw(DVector::from_element(1, x[0])))?;
        let b = self.psi.hessian(&Point::raw(DVector::from_element(1, x[1])))?;
        Some(DMatrix::from_diagonal(&DVector::from_vec(vec![a[(0, 0)], b[(0, 0)]])))
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// Builds the schedule for `alpha` at depth `n_max` and the function on it.
pub fn build_counterexample(alpha: &AlphaSpec, n_max: usize) -> Result<Counterexample2D> {
    let schedule = build_profile(alpha, &SchedulePolicy::with_depth(n_max))?;
    Counterexample2D::new(schedule)
}

/// Integrates the flow from the origin on the default checkpoint grid.
pub fn flow_from_origin(ce: &Counterexample2D) -> Result<Trajectory> {
    integrate_flow(ce, &Point::zeros(2), &ce.flow_config(&CheckpointOptions::default()))
}
