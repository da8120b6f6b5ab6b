//! Slopes, Crandall–Pazy direction estimates and cosmic secants.
//!
//! The Crandall–Pazy direction `p_f` is the element of minimal norm of the
//! closure of the range of `∂f`. Along any flow `γ(t)/t → −p_f` and
//! `∂°f(γ(t)) → p_f`; three estimators are built on these facts.

use std::fmt::Write as _;

use crate::convex::{min_norm_subgrad, ConvexFn};
use crate::error::{Error, Result};
use crate::flow::{integrate_flow, FlowConfig, Trajectory};
use crate::point::Point;

/// Default agreement tolerance for direction estimates.
pub const TOL_CP: f64 = 1e-3;

/// `s_f(x) = ‖∂°f(x)‖`.
pub fn slope(f: &(impl ConvexFn + ?Sized), x: &Point) -> Result<f64> {
    Ok(min_norm_subgrad(f, x)?.norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpMethod {
    PazyRatio,
    LimitVelocity,
    MinNormSearch,
}

impl CpMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CpMethod::PazyRatio => "pazy_ratio",
            CpMethod::LimitVelocity => "limit_velocity",
            CpMethod::MinNormSearch => "min_norm_search",
        }
    }
}

/// An estimate of `p_f` with the intermediate estimates that led to it.
#[derive(Clone, Debug)]
pub struct CpEstimate {
    pub p: Point,
    pub method: CpMethod,
    /// `(t, estimate at t)`; for the search, `t` is the flow time of the
    /// best point.
    pub diagnostics: Vec<(f64, Point)>,
    pub converged: bool,
}

impl CpEstimate {
    /// CSV rows `method,t,p_0..p_{d−1},norm`.
    pub fn to_csv(&self) -> String {
        let d = self.p.dim();
        let mut s = String::from("method,t");
        for i in 0..d {
            let _ = write!(s, ",p_{i}");
        }
        s.push_str(",norm\n");
        for (t, p) in &self.diagnostics {
            let _ = write!(s, "{},{t:.16e}", self.method.as_str());
            for c in p.iter() {
                let _ = write!(s, ",{c:.16e}");
            }
            let _ = writeln!(s, ",{:.16e}", p.norm());
        }
        s
    }

    /// `max` distance between the last two diagnostics.
    pub fn last_change(&self) -> f64 {
        match self.diagnostics.len() {
            0 | 1 => 0.0,
            n => self.diagnostics[n - 1].1.distance(&self.diagnostics[n - 2].1),
        }
    }
}

/// `p ≈ −γ(T)/T` read off an existing trajectory, with diagnostics at
/// `T/4, T/2, 3T/4, T`.
pub fn pazy_ratio_from(traj: &Trajectory, tol_cp: f64) -> CpEstimate {
    let t_end = traj.horizon();
    let diagnostics: Vec<(f64, Point)> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|q| {
            let k = traj.index_at(q * t_end);
            let t = traj.times[k];
            (t, traj.points[k].scale(-1.0 / t))
        })
        .collect();
    let p = diagnostics.last().unwrap().1.clone();
    let mut est = CpEstimate {
        p,
        method: CpMethod::PazyRatio,
        diagnostics,
        converged: false,
    };
    est.converged = est.last_change() < tol_cp;
    est
}

pub fn cp_pazy_ratio(f: &(impl ConvexFn + ?Sized), x0: &Point, cfg: &FlowConfig) -> Result<CpEstimate> {
    let traj = integrate_flow(f, x0, cfg)?;
    Ok(pazy_ratio_from(&traj, TOL_CP))
}

/// `p ≈ −γ'(T)`, with the velocities of the last decile as diagnostics.
/// Trajectories carry `−∂°f` as velocity whenever `f` has an analytic
/// subgradient; otherwise the last-decile average of forward differences is
/// used.
pub fn limit_velocity_from(f: &(impl ConvexFn + ?Sized), traj: &Trajectory, tol_cp: f64) -> CpEstimate {
    let tail = traj.last_decile();
    let diagnostics: Vec<(f64, Point)> = tail
        .clone()
        .map(|k| (traj.times[k], -&traj.velocities[k]))
        .collect();
    let p = match f.min_subgrad(traj.last_point()) {
        Some(g) => g,
        None => {
            let mut acc = Point::zeros(traj.dim());
            for (_, v) in &diagnostics {
                acc += v;
            }
            acc.scale(1.0 / diagnostics.len() as f64)
        }
    };
    let drift = diagnostics
        .iter()
        .map(|(_, q)| q.distance(&p))
        .fold(0.0, f64::max);
    CpEstimate {
        p,
        method: CpMethod::LimitVelocity,
        diagnostics,
        converged: drift < tol_cp,
    }
}

pub fn cp_limit_velocity(f: &(impl ConvexFn + ?Sized), x0: &Point, cfg: &FlowConfig) -> Result<CpEstimate> {
    let traj = integrate_flow(f, x0, cfg)?;
    Ok(limit_velocity_from(f, &traj, TOL_CP))
}

/// Limits for [`cp_min_norm_search`].
#[derive(Clone, Debug)]
pub struct SearchBudget {
    /// Flow run from every seed.
    pub flow: FlowConfig,
    /// Total number of prox steps over all seeds.
    pub max_steps: usize,
    pub tol_cp: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            flow: FlowConfig::new(0.1, 50.0),
            max_steps: 100_000,
            tol_cp: TOL_CP,
        }
    }
}

/// Minimises the slope by flowing from every seed (the slope is
/// nonincreasing along flows) and returns `∂°f` at the best point found.
/// Ties in slope go to the lexicographically smallest point.
///
/// When the budget runs out the best point so far is returned with
/// `converged = false`.
pub fn cp_min_norm_search(
    f: &(impl ConvexFn + ?Sized),
    seeds: &[Point],
    budget: &SearchBudget,
) -> Result<CpEstimate> {
    if seeds.is_empty() {
        return Err(Error::invalid("min-norm search needs at least one seed"));
    }
    let steps_per_seed = budget.flow.times()?.len() - 1;
    let mut used = 0usize;
    let mut best: Option<(f64, Point, f64)> = None;
    let mut diagnostics = Vec::new();
    let mut exhausted = false;
    let mut settled = true;
    for seed in seeds {
        if used + steps_per_seed > budget.max_steps {
            exhausted = true;
            break;
        }
        used += steps_per_seed;
        let traj = integrate_flow(f, seed, &budget.flow)?;
        let k = (0..traj.len())
            .min_by(|&a, &b| traj.speeds[a].total_cmp(&traj.speeds[b]).then(b.cmp(&a)))
            .unwrap();
        let (s, x) = (traj.speeds[k], traj.points[k].clone());
        let g = min_norm_subgrad(f, &x)?;
        diagnostics.push((traj.times[k], g.clone()));
        let better = match &best {
            None => true,
            Some((bs, bx, _)) => s < *bs || (s == *bs && x.lex_cmp(bx).is_lt()),
        };
        if better {
            settled = traj.limit_speed().drift < budget.tol_cp;
            best = Some((s, x, traj.times[k]));
        }
    }
    let (_, x, _) = best.ok_or_else(|| Error::invalid("budget too small for a single seed"))?;
    let p = min_norm_subgrad(f, &x)?;
    Ok(CpEstimate {
        p,
        method: CpMethod::MinNormSearch,
        diagnostics,
        converged: !exhausted && settled,
    })
}

/// Where the secant tail starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailStart {
    /// Fraction of the horizon.
    Fraction(f64),
    /// Absolute flow time.
    Time(f64),
}

#[derive(Clone, Debug)]
pub struct SecantConfig {
    /// Leader radius on the unit sphere.
    pub cluster_tol: f64,
    /// `‖γ(T) − γ(0)‖` must exceed this.
    pub escape_radius: f64,
    pub tail: TailStart,
    /// Visits per cluster needed to call the secants oscillating.
    pub min_visits: usize,
}

impl Default for SecantConfig {
    fn default() -> Self {
        SecantConfig {
            cluster_tol: 0.1,
            escape_radius: 10.0,
            tail: TailStart::Fraction(0.1),
            min_visits: 2,
        }
    }
}

/// Clustered secant directions of a diverging curve.
#[derive(Clone, Debug)]
pub struct SecantSet {
    /// Cluster leaders, unit vectors.
    pub directions: Vec<Point>,
    /// Some pair of well separated clusters is visited alternately, each at
    /// least `min_visits` times.
    pub oscillating: bool,
    /// `(t, u(t))` for every tail sample.
    pub samples: Vec<(f64, Point)>,
    /// Cluster index of every sample.
    pub membership: Vec<usize>,
}

impl SecantSet {
    /// CSV rows `t,u_0..u_{d−1},cluster`.
    pub fn to_csv(&self) -> String {
        let d = self.samples.first().map_or(0, |(_, u)| u.dim());
        let mut s = String::from("t");
        for i in 0..d {
            let _ = write!(s, ",u_{i}");
        }
        s.push_str(",cluster\n");
        for ((t, u), c) in self.samples.iter().zip(&self.membership) {
            let _ = write!(s, "{t:.16e}");
            for x in u.iter() {
                let _ = write!(s, ",{x:.16e}");
            }
            let _ = writeln!(s, ",{c}");
        }
        s
    }

    /// Leaders within `tol` of `±axis_i`.
    pub fn near_axis(&self, i: usize, tol: f64) -> Vec<&Point> {
        self.directions
            .iter()
            .filter(|u| {
                let mut e = Point::zeros(u.dim());
                e[i] = 1.0;
                u.distance(&e).min(u.distance(&-&e)) <= tol
            })
            .collect()
    }
}

/// Normalised secants `(γ(0) − γ(t))/‖γ(0) − γ(t)‖` over the tail, clustered
/// greedily.
///
/// Leaders are chosen scanning backwards from the last sample (a sample
/// further than `cluster_tol` from every leader becomes one); each sample
/// then joins its nearest leader.
pub fn cosmic_secants(traj: &Trajectory, cfg: &SecantConfig) -> Result<SecantSet> {
    let x0 = &traj.points[0];
    let distance = traj.last_point().distance(x0);
    if !(distance > cfg.escape_radius) {
        return Err(Error::FlowBounded {
            distance,
            radius: cfg.escape_radius,
        });
    }
    let t_start = match cfg.tail {
        TailStart::Fraction(q) => q * traj.horizon(),
        TailStart::Time(t) => t,
    };
    let samples: Vec<(f64, Point)> = traj
        .times
        .iter()
        .zip(&traj.points)
        .filter(|(t, _)| **t >= t_start)
        .filter_map(|(t, p)| {
            let v = x0 - p;
            let n = v.norm();
            (n > 0.0).then(|| (*t, v.scale(1.0 / n)))
        })
        .collect();
    let mut directions: Vec<Point> = Vec::new();
    for (_, u) in samples.iter().rev() {
        if directions.iter().all(|l| l.distance(u) > cfg.cluster_tol) {
            directions.push(u.clone());
        }
    }
    let membership: Vec<usize> = samples
        .iter()
        .map(|(_, u)| {
            (0..directions.len())
                .min_by(|&a, &b| directions[a].distance(u).total_cmp(&directions[b].distance(u)))
                .unwrap()
        })
        .collect();
    let oscillating = alternates(&directions, &membership, cfg);
    Ok(SecantSet {
        directions,
        oscillating,
        samples,
        membership,
    })
}

// Some pair (a, b) of leaders more than 2·cluster_tol apart whose visits,
// read in time order with other clusters ignored, form at least
// `min_visits` runs each.
fn alternates(directions: &[Point], membership: &[usize], cfg: &SecantConfig) -> bool {
    let n = directions.len();
    for a in 0..n {
        for b in (a + 1)..n {
            if directions[a].distance(&directions[b]) <= 2.0 * cfg.cluster_tol {
                continue;
            }
            let mut runs = [0usize; 2];
            let mut last = None;
            for &m in membership {
                let side = if m == a {
                    0
                } else if m == b {
                    1
                } else {
                    continue;
                };
                if last != Some(side) {
                    runs[side] += 1;
                    last = Some(side);
                }
            }
            if runs[0] >= cfg.min_visits && runs[1] >= cfg.min_visits {
                return true;
            }
        }
    }
    false
}
