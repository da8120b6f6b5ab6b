use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::profile::{SpeedFn, SpeedProfile};
use crate::convex::{ConvexFn, ProxOutput};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::quadrature::romberg;

/// Settings for the quadrature route of [`Potential1D`].
#[derive(Clone, Debug)]
pub struct GridOptions {
    /// Right end of the represented time range.
    pub t_max: f64,
    /// Left end is `−t_pre`; the profile must be positive there.
    pub t_pre: f64,
    pub nodes: usize,
    /// Absolute tolerance of each cell integral.
    pub cell_tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            t_max: 100.0,
            t_pre: 0.0,
            nodes: 100_000,
            cell_tol: 1e-14,
        }
    }
}

impl GridOptions {
    pub fn with_t_max(t_max: f64) -> Self {
        GridOptions {
            t_max,
            ..Default::default()
        }
    }
}

/// Cumulative integrals of a profile on a uniform grid over
/// `[−t_pre, t_max]`, shifted so that both vanish at `t = 0`.
#[derive(Debug)]
struct QuadGrid {
    speed: Arc<dyn SpeedFn>,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    cum_sq: Vec<f64>,
    cell_tol: f64,
}

impl QuadGrid {
    fn build(speed: Arc<dyn SpeedFn>, opts: &GridOptions) -> Result<Self> {
        if !(opts.t_max > 0.0 && opts.t_max.is_finite()) || opts.nodes < 2 {
            return Err(Error::invalid("grid needs t_max > 0 and at least 2 nodes"));
        }
        if !(opts.t_pre >= 0.0 && opts.t_pre.is_finite()) {
            return Err(Error::invalid("t_pre must be >= 0"));
        }
        let n = opts.nodes;
        let (lo, hi) = (-opts.t_pre, opts.t_max);
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        nodes[n - 1] = hi;
        let mut prev = f64::INFINITY;
        for &t in &nodes {
            let v = speed.speed(t);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("speed must be positive, got {v} at t={t}")));
            }
            if v > prev * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("speed must be nonincreasing, increases at t={t}")));
            }
            prev = v;
        }
        let mut cum = Vec::with_capacity(n);
        let mut cum_sq = Vec::with_capacity(n);
        let (mut acc, mut acc_sq) = (0.0, 0.0);
        for i in 0..n {
            cum.push(acc);
            cum_sq.push(acc_sq);
            if i + 1 < n {
                let (a, b) = (nodes[i], nodes[i + 1]);
                acc += romberg(&|s| speed.speed(s), a, b, opts.cell_tol);
                acc_sq += romberg(&|s| speed.speed(s).powi(2), a, b, opts.cell_tol);
            }
        }
        let mut grid = QuadGrid {
            speed,
            nodes,
            cum,
            cum_sq,
            cell_tol: opts.cell_tol,
        };
        let (off, off_sq) = (grid.integral(0.0), grid.integral_sq(0.0));
        grid.cum.iter_mut().for_each(|c| *c -= off);
        grid.cum_sq.iter_mut().for_each(|c| *c -= off_sq);
        Ok(grid)
    }

    fn cell(&self, t: f64) -> usize {
        self.nodes
            .partition_point(|&n| n <= t)
            .saturating_sub(1)
            .min(self.nodes.len() - 2)
    }

    fn integral(&self, t: f64) -> f64 {
        let i = self.cell(t);
        self.cum[i] + romberg(&|s| self.speed.speed(s), self.nodes[i], t, self.cell_tol)
    }

    fn integral_sq(&self, t: f64) -> f64 {
        let i = self.cell(t);
        self.cum_sq[i] + romberg(&|s| self.speed.speed(s).powi(2), self.nodes[i], t, self.cell_tol)
    }

    fn inverse(&self, u: f64) -> f64 {
        let i = self
            .cum
            .partition_point(|&c| c <= u)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        let (mut lo, mut hi) = (self.nodes[i], self.nodes[i + 1]);
        let mut s = lo + (u - self.cum[i]) / self.speed.speed(lo);
        for _ in 0..100 {
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let g = self.integral(s) - u;
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            if g.abs() <= 1e-15 * (1.0 + u.abs()) || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
            s -= g / self.speed.speed(s);
        }
        s
    }
}

#[derive(Debug)]
enum Primitive {
    Exact(SpeedProfile),
    Grid(QuadGrid),
}

/// Convex potential `Φ` on `ℝ` whose gradient flow from `r(x)` has speed
/// `φ(x + t)`.
///
/// With `r(t) = ∫₀ᵗ φ`, the potential is `Φ(u) = −∫₀^{r⁻¹(u)} φ²` so that
/// `Φ′(u) = −φ(r⁻¹(u))`, nondecreasing because `φ` is nonincreasing.
///
/// The represented range is `[r(−t_pre), r(t_max)]`; the strict accessors
/// ([`r`](Self::r), [`r_inv`](Self::r_inv), [`phi`](Self::phi), …) reject
/// arguments outside it. As a [`ConvexFn`], `Φ` is extended affinely past
/// both ends (`φ` frozen at `φ(−t_pre)` on the left and at `φ(t_max)` on the
/// right), which keeps it convex and `C¹`.
#[derive(Debug)]
pub struct Potential1D {
    primitive: Primitive,
    t_pre: f64,
    t_max: f64,
}

impl Potential1D {
    /// Exact route for piecewise profiles (whose first level already extends
    /// to negative times).
    pub fn from_profile(profile: SpeedProfile, t_max: f64, t_pre: f64) -> Result<Self> {
        if !(t_max > 0.0) || !(t_pre >= 0.0) {
            return Err(Error::invalid("potential range needs t_max > 0 and t_pre >= 0"));
        }
        Ok(Potential1D {
            primitive: Primitive::Exact(profile),
            t_pre,
            t_max,
        })
    }

    /// Quadrature route for any positive nonincreasing profile.
    pub fn from_speed(speed: Arc<dyn SpeedFn>, opts: &GridOptions) -> Result<Self> {
        let grid = QuadGrid::build(speed, opts)?;
        Ok(Potential1D {
            t_max: opts.t_max,
            primitive: Primitive::Grid(grid),
            t_pre: opts.t_pre,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn t_pre(&self) -> f64 {
        self.t_pre
    }

    /// `φ(t)` of the extended profile.
    pub fn speed(&self, t: f64) -> f64 {
        let t = t.clamp(-self.t_pre, self.t_max);
        match &self.primitive {
            Primitive::Exact(p) => p.speed(t),
            Primitive::Grid(g) => g.speed.speed(t),
        }
    }

    // right derivative at the ends of the represented range
    fn speed_derivative(&self, t: f64) -> f64 {
        if t < -self.t_pre || t >= self.t_max {
            return 0.0;
        }
        match &self.primitive {
            Primitive::Exact(p) => p.speed_derivative(t),
            Primitive::Grid(g) => g.speed.speed_derivative(t),
        }
    }

    // ∫₀ᵗ φ and ∫₀ᵗ φ² on [−t_pre, t_max]
    fn raw_integrals(&self, t: f64) -> (f64, f64) {
        match &self.primitive {
            Primitive::Exact(p) => (p.integral(t), p.integral_sq(t)),
            Primitive::Grid(g) => (g.integral(t), g.integral_sq(t)),
        }
    }

    fn r_ext(&self, t: f64) -> f64 {
        if t < -self.t_pre {
            let lo = -self.t_pre;
            return self.raw_integrals(lo).0 + self.speed(lo) * (t - lo);
        }
        if t > self.t_max {
            let r_end = self.raw_integrals(self.t_max).0;
            return r_end + self.speed(self.t_max) * (t - self.t_max);
        }
        self.raw_integrals(t).0
    }

    fn energy_ext(&self, t: f64) -> f64 {
        if t < -self.t_pre {
            let lo = -self.t_pre;
            return self.raw_integrals(lo).1 + self.speed(lo).powi(2) * (t - lo);
        }
        if t > self.t_max {
            let e_end = self.raw_integrals(self.t_max).1;
            return e_end + self.speed(self.t_max).powi(2) * (t - self.t_max);
        }
        self.raw_integrals(t).1
    }

    fn r_inv_ext(&self, u: f64) -> f64 {
        let lo = -self.t_pre;
        let r_lo = self.raw_integrals(lo).0;
        if u < r_lo {
            return lo + (u - r_lo) / self.speed(lo);
        }
        let r_end = self.raw_integrals(self.t_max).0;
        if u > r_end {
            return self.t_max + (u - r_end) / self.speed(self.t_max);
        }
        match &self.primitive {
            Primitive::Exact(p) => p.inverse_integral(u).clamp(lo, self.t_max),
            Primitive::Grid(g) => g.inverse(u),
        }
    }

    /// `[r(−t_pre), r(t_max)]`.
    pub fn valid_range(&self) -> (f64, f64) {
        (self.r_ext(-self.t_pre), self.r_ext(self.t_max))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < -self.t_pre || t > self.t_max || t.is_nan() {
            return Err(Error::InversionOutOfRange {
                value: t,
                lo: -self.t_pre,
                hi: self.t_max,
            });
        }
        Ok(())
    }

    fn check_value(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.valid_range();
        if u < lo || u > hi || u.is_nan() {
            return Err(Error::InversionOutOfRange { value: u, lo, hi });
        }
        Ok(())
    }

    /// `r(t) = ∫₀ᵗ φ`.
    pub fn r(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.r_ext(t))
    }

    /// `∫₀ᵗ φ²`.
    pub fn energy(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.energy_ext(t))
    }

    pub fn r_inv(&self, u: f64) -> Result<f64> {
        self.check_value(u)?;
        Ok(self.r_inv_ext(u))
    }

    /// `Φ′(u) = −φ(r⁻¹(u))`.
    pub fn phi_prime(&self, u: f64) -> Result<f64> {
        self.check_value(u)?;
        Ok(-self.speed(self.r_inv_ext(u)))
    }

    /// `Φ(u)`, normalised by `Φ(0) = 0`.
    pub fn phi(&self, u: f64) -> Result<f64> {
        self.check_value(u)?;
        Ok(-self.energy_ext(self.r_inv_ext(u)))
    }

    /// `Φ″(u) = −φ′(s)/φ(s)` at `s = r⁻¹(u)`.
    pub fn phi_second(&self, u: f64) -> Result<f64> {
        self.check_value(u)?;
        let s = self.r_inv_ext(u);
        Ok(-self.speed_derivative(s) / self.speed(s))
    }

    /// Exact gradient curve of the extended potential from `x`:
    /// `γ(t) = r(r⁻¹(x) + t)`.
    pub fn flow(&self, x: f64, t: f64) -> f64 {
        self.r_ext(self.r_inv_ext(x) + t)
    }

    // Implicit Euler step in the time variable: solve
    // r(s) − x − h·φ(s) = 0, increasing in s, bracketed by [r⁻¹(x), r⁻¹(x) + h].
    // The residual is relative to 1 + |x|.
    fn prox_scalar(&self, x: f64, h: f64) -> (f64, f64) {
        let s0 = self.r_inv_ext(x);
        let g = |s: f64| self.r_ext(s) - x - h * self.speed(s);
        let (mut lo, mut hi) = (s0, s0 + h);
        if g(hi) <= 0.0 {
            return (self.r_ext(hi), g(hi).abs() / (1.0 + x.abs()));
        }
        let mut s = hi;
        let mut gs = g(s);
        for _ in 0..200 {
            let dg = self.speed(s) - h * self.speed_derivative(s);
            let mut next = s - gs / dg;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            s = next;
            gs = g(s);
            if gs > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let scale = x.abs() + h * self.speed(s) + 1e-300;
            if gs.abs() <= 4.0 * f64::EPSILON * scale {
                return (self.r_ext(s), gs.abs() / (1.0 + x.abs()));
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        // The root sits between adjacent floats in s (a blend narrower than
        // one ulp of time). Solve u = x + h·φ with φ interpolated linearly
        // in u across [r(lo), r(hi)]; g(lo) ≤ 0 < g(hi) keeps u inside.
        let (ul, uh) = (self.r_ext(lo), self.r_ext(hi));
        let (pl, ph) = (self.speed(lo), self.speed(hi));
        if !(uh > ul) {
            return (ul, g(lo).abs() / (1.0 + x.abs()));
        }
        let k = (ph - pl) / (uh - ul);
        let u = ((x + h * (pl - k * ul)) / (1.0 - h * k)).clamp(ul, uh);
        let model = u - x - h * (pl + k * (u - ul));
        (u, model.abs() / (1.0 + x.abs()))
    }
}

impl ConvexFn for Potential1D {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> f64 {
        -self.energy_ext(self.r_inv_ext(x[0]))
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let (u, residual) = self.prox_scalar(x[0], step);
        Ok(ProxOutput {
            point: Point::raw(DVector::from_element(1, u)),
            residual,
        })
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let g = -self.speed(self.r_inv_ext(x[0]));
        Some(Point::raw(DVector::from_element(1, g)))
    }

    fn hessian(&self, x: &Point) -> Option<DMatrix<f64>> {
        let s = self.r_inv_ext(x[0]);
        Some(DMatrix::from_element(1, 1, -self.speed_derivative(s) / self.speed(s)))
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// Builds `Φ` for a piecewise profile, represented on `[r(−t_max), r(t_max)]`.
pub fn build_potential(profile: &SpeedProfile, t_max: f64) -> Result<Potential1D> {
    Potential1D::from_profile(profile.clone(), t_max, t_max)
}
