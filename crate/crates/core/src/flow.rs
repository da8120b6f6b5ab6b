//! Proximal-point integration of subgradient curves and flow diagnostics.

use std::fmt::Write as _;

use crate::convex::{min_norm_subgrad, ConvexFn};
use crate::error::{Error, Result};
use crate::point::Point;

/// How the time grid of a flow is laid out.
#[derive(Clone, Debug, PartialEq)]
pub enum StepPolicy {
    /// `t_k = k·h`, with a shorter last step when `h` does not divide `T`.
    Fixed,
    /// The first step `[0, h]` is split geometrically into
    /// `h/2^levels, …, h/4, h/2`; uniform after.
    GeometricRefinement { levels: usize },
    /// Explicit increasing times starting at `0`.
    Grid(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub step: f64,
    pub horizon: f64,
    pub policy: StepPolicy,
    /// Largest prox residual accepted at any step.
    pub max_residual: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step: 0.1,
            horizon: 50.0,
            policy: StepPolicy::Fixed,
            max_residual: 1e-5,
        }
    }
}

impl FlowConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        FlowConfig {
            step,
            horizon,
            ..Default::default()
        }
    }

    pub fn with_grid(grid: Vec<f64>) -> Self {
        let horizon = grid.last().copied().unwrap_or(0.0);
        let step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        FlowConfig {
            step,
            horizon,
            policy: StepPolicy::Grid(grid),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepPolicy::Grid(g) = &self.policy {
            if g.len() < 2 || g[0] != 0.0 || g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("grid must start at 0 and increase strictly"));
            }
            if g.iter().any(|t| !t.is_finite()) {
                return Err(Error::invalid("grid times must be finite"));
            }
            return Ok(());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(format!("step must be > 0, got {}", self.step)));
        }
        if !(self.horizon.is_finite() && self.step <= self.horizon) {
            return Err(Error::invalid(format!(
                "need step <= horizon, got h={} T={}",
                self.step, self.horizon
            )));
        }
        Ok(())
    }

    /// The time grid `0 = t_0 < t_1 < … < t_N = T`.
    pub fn times(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (h, t_end) = (self.step, self.horizon);
        let uniform_from = |start: f64, ts: &mut Vec<f64>| {
            let n = ((t_end - start) / h + 1e-9).floor() as usize;
            for k in 1..=n {
                ts.push(start + k as f64 * h);
            }
            match ts.last() {
                Some(&last) if last >= t_end - 1e-9 * h => {
                    let i = ts.len() - 1;
                    ts[i] = t_end;
                }
                _ => ts.push(t_end),
            }
        };
        Ok(match &self.policy {
            StepPolicy::Grid(g) => g.clone(),
            StepPolicy::Fixed => {
                let mut ts = vec![0.0];
                uniform_from(0.0, &mut ts);
                ts
            }
            StepPolicy::GeometricRefinement { levels } => {
                let mut ts = vec![0.0];
                for j in (1..=*levels).rev() {
                    ts.push(h * (-(j as f64)).exp2());
                }
                ts.push(h);
                uniform_from(h, &mut ts);
                ts.dedup();
                ts
            }
        })
    }
}

/// A discretised subgradient curve.
///
/// `velocities[k]` is the right derivative `−∂°f(points[k])` when `f` has an
/// analytic minimal-norm subgradient, and the forward difference otherwise
/// (the last point repeats the last difference). `residuals[k]` is the prox
/// residual of step `k → k+1`.
#[derive(Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub velocities: Vec<Point>,
    pub speeds: Vec<f64>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("len", &self.len())
            .field("horizon", &self.horizon())
            .field("last", &self.points.last())
            .finish()
    }
}

/// Average speed over the last tenth of the horizon, and its spread there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitSpeed {
    pub mean: f64,
    pub drift: f64,
}

impl LimitSpeed {
    /// Drift above which the horizon is likely too short.
    pub const DRIFT_WARNING: f64 = 1e-3;

    pub fn drifting(&self) -> bool {
        self.drift > Self::DRIFT_WARNING
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Point::dim)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn last_point(&self) -> &Point {
        self.points.last().expect("trajectory has at least the start point")
    }

    /// Index of the first grid time `≥ t` (the last index if none).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t).min(self.len() - 1)
    }

    /// Indices of the last tenth of the horizon.
    pub fn last_decile(&self) -> std::ops::Range<usize> {
        self.index_at(0.9 * self.horizon())..self.len()
    }

    pub fn limit_speed(&self) -> LimitSpeed {
        let tail = &self.speeds[self.last_decile()];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
        LimitSpeed { mean, drift: hi - lo }
    }

    /// CSV with header `t,x_0,…,x_{d−1},speed,value`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = String::from("t");
        for i in 0..d {
            let _ = write!(s, ",x_{i}");
        }
        s.push_str(",speed,value\n");
        for k in 0..self.len() {
            let _ = write!(s, "{:.16e}", self.times[k]);
            for c in self.points[k].iter() {
                let _ = write!(s, ",{c:.16e}");
            }
            let _ = writeln!(s, ",{:.16e},{:.16e}", self.speeds[k], self.values[k]);
        }
        s
    }
}

/// Integrates `γ' ∈ −∂f(γ)` from `x0` with `x_{k+1} = prox_{h_k f}(x_k)`.
///
/// A failing or inaccurate prox step aborts with the trajectory computed so
/// far.
pub fn integrate_flow(f: &(impl ConvexFn + ?Sized), x0: &Point, cfg: &FlowConfig) -> Result<Trajectory> {
    x0.check_dim(f.dim())?;
    if !x0.is_finite() {
        return Err(Error::NonFinite);
    }
    if f.has_proper_domain() && !f.in_domain(x0) {
        return Err(Error::OutsideDomain);
    }
    let times = cfg.times()?;
    let mut points = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len());
    points.push(x0.clone());
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        let step = f.prox(&points[k], h).and_then(|out| {
            if !out.point.is_finite() {
                Err(Error::NonFinite)
            } else if !(out.residual <= cfg.max_residual) {
                Err(Error::ProxNonConvergence {
                    iterations: 0,
                    residual: out.residual,
                })
            } else {
                Ok(out)
            }
        });
        match step {
            Ok(out) => {
                points.push(out.point);
                residuals.push(out.residual);
            }
            Err(e) => {
                let partial = finish(f, times[..=k].to_vec(), points, residuals);
                return Err(Error::FlowAborted {
                    step: k,
                    partial: Box::new(partial),
                    source: Box::new(e),
                });
            }
        }
    }
    Ok(finish(f, times, points, residuals))
}

fn finish(
    f: &(impl ConvexFn + ?Sized),
    times: Vec<f64>,
    points: Vec<Point>,
    residuals: Vec<f64>,
) -> Trajectory {
    let n = points.len();
    let forward = |k: usize| -> Point {
        let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
        (&points[b] - &points[a]).scale(1.0 / (times[b] - times[a]))
    };
    let mut velocities = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    for k in 0..n {
        let analytic = f.min_subgrad(&points[k]);
        let v = match &analytic {
            Some(g) => -g,
            None if n > 1 => forward(k),
            None => Point::zeros(points[k].dim()),
        };
        let speed = match analytic {
            Some(g) => g.norm(),
            None => match min_norm_subgrad(f, &points[k]) {
                Ok(g) => g.norm(),
                Err(_) => v.norm(),
            },
        };
        velocities.push(v);
        speeds.push(speed);
    }
    let values = points.iter().map(|p| f.value(p)).collect();
    Trajectory {
        times,
        points,
        velocities,
        speeds,
        values,
        residuals,
    }
}

/// Result of [`contraction_check`].
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub initial_distance: f64,
    /// `max_t ‖γ_x(t) − γ_y(t)‖ − ‖x0 − y0‖`.
    pub max_gap: f64,
    pub distances: Vec<f64>,
}

/// Integrates two flows on the same grid and compares their distance with the
/// initial one.
pub fn contraction_check(
    f: &(impl ConvexFn + ?Sized),
    x0: &Point,
    y0: &Point,
    cfg: &FlowConfig,
) -> Result<ContractionReport> {
    let a = integrate_flow(f, x0, cfg)?;
    let b = integrate_flow(f, y0, cfg)?;
    let initial_distance = x0.distance(y0);
    let distances: Vec<f64> = a.points.iter().zip(&b.points).map(|(p, q)| p.distance(q)).collect();
    let max_gap = distances
        .iter()
        .map(|d| d - initial_distance)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionReport {
        initial_distance,
        max_gap,
        distances,
    })
}

/// `max_k |values[k] − values[0] + ∫₀^{t_k} speed²|`, integral by trapezoid.
pub fn energy_identity_check(traj: &Trajectory) -> f64 {
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        acc += 0.5 * dt * (traj.speeds[k - 1].powi(2) + traj.speeds[k].powi(2));
        worst = worst.max((traj.values[k] - traj.values[0] + acc).abs());
    }
    worst
}

/// `max_t ‖γ_x̂(t) − (x̂ − t·p)‖` over the grid.
pub fn straight_line_check(
    f: &(impl ConvexFn + ?Sized),
    x_hat: &Point,
    p: &Point,
    cfg: &FlowConfig,
) -> Result<f64> {
    p.check_dim(f.dim())?;
    let traj = integrate_flow(f, x_hat, cfg)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.points)
        .map(|(t, q)| q.distance(&(x_hat - &p.scale(*t))))
        .fold(0.0, f64::max))
}
