//! Convex functions on `ℝ^d` and the primitive maps built on them.

pub mod catalog;
pub mod functions;
pub mod solver;

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::point::Point;

pub use functions::{AbsPlusLinear, Affine, MoreauEnvelope, Norm, Quadratic, SeparableSum, Shifted};

/// Default threshold on successive Moreau–Yosida gradient estimates.
pub const TOL_GRAD: f64 = 1e-6;

/// Result of a proximal step: the point and the optimality residual of the
/// solver that produced it (exactly `0.0` for closed-form maps).
#[derive(Clone, Debug)]
pub struct ProxOutput {
    pub point: Point,
    pub residual: f64,
}

impl ProxOutput {
    pub fn exact(point: Point) -> Self {
        ProxOutput {
            point,
            residual: 0.0,
        }
    }
}

/// A proper lower semicontinuous convex function on `ℝ^d`.
///
/// Implementations are immutable and shareable across threads. Only
/// [`value`](ConvexFn::value) and [`dim`](ConvexFn::dim) are mandatory; the
/// default proximal map falls back to [`solver::prox_numeric`].
pub trait ConvexFn: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `f(x)`, or `+∞` outside the declared domain.
    fn value(&self, x: &Point) -> f64;

    /// Proximal map of `step·f`: `argmin_u f(u) + ‖u−x‖²/(2·step)`.
    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        solver::prox_numeric(self, x, step, &solver::SolverOptions::default())
    }

    /// Analytic minimal-norm subgradient `∂°f(x)`, when the implementation
    /// knows one.
    fn min_subgrad(&self, _x: &Point) -> Option<Point> {
        None
    }

    /// Analytic Hessian, for `C²` functions.
    fn hessian(&self, _x: &Point) -> Option<DMatrix<f64>> {
        None
    }

    /// Whether `f` is differentiable everywhere on its domain.
    fn is_differentiable(&self) -> bool {
        false
    }

    /// Functions with a proper domain override this together with
    /// [`in_domain`](ConvexFn::in_domain).
    fn has_proper_domain(&self) -> bool {
        false
    }

    fn in_domain(&self, _x: &Point) -> bool {
        true
    }
}

fn check_point(f: &(impl ConvexFn + ?Sized), x: &Point) -> Result<()> {
    x.check_dim(f.dim())?;
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step must be > 0, got {step}")));
    }
    Ok(())
}

/// Evaluates `f(x)`. Returns `+∞` only for functions declaring a proper domain.
pub fn eval(f: &(impl ConvexFn + ?Sized), x: &Point) -> Result<f64> {
    check_point(f, x)?;
    if f.has_proper_domain() && !f.in_domain(x) {
        return Ok(f64::INFINITY);
    }
    let v = f.value(x);
    if v.is_nan() || (v == f64::INFINITY && !f.has_proper_domain()) {
        return Err(Error::OutsideDomain);
    }
    Ok(v)
}

/// `argmin_u f(u) + ‖u−x‖²/(2λ)`.
pub fn prox_point(f: &(impl ConvexFn + ?Sized), x: &Point, lambda: f64) -> Result<Point> {
    check_point(f, x)?;
    check_step(lambda)?;
    let out = f.prox(x, lambda)?;
    if !out.point.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out.point)
}

/// Gradient of the Moreau envelope `f_λ` at `x`: `(x − prox_λf(x))/λ`.
pub fn moreau_gradient(f: &(impl ConvexFn + ?Sized), x: &Point, lambda: f64) -> Result<Point> {
    let p = prox_point(f, x, lambda)?;
    Ok((x - &p).scale(1.0 / lambda))
}

/// Controls the Moreau–Yosida limit used when no analytic subgradient exists.
#[derive(Clone, Debug)]
pub struct SubgradOptions {
    pub tol_grad: f64,
    pub lambda0: f64,
    pub shrink: f64,
    pub max_levels: usize,
}

impl Default for SubgradOptions {
    fn default() -> Self {
        SubgradOptions {
            tol_grad: TOL_GRAD,
            lambda0: 1.0,
            shrink: 0.1,
            max_levels: 12,
        }
    }
}

/// `∂°f(x)`, the element of minimal norm of `∂f(x)`.
pub fn min_norm_subgrad(f: &(impl ConvexFn + ?Sized), x: &Point) -> Result<Point> {
    min_norm_subgrad_with(f, x, &SubgradOptions::default())
}

pub fn min_norm_subgrad_with(
    f: &(impl ConvexFn + ?Sized),
    x: &Point,
    opts: &SubgradOptions,
) -> Result<Point> {
    check_point(f, x)?;
    if let Some(g) = f.min_subgrad(x) {
        return Ok(g);
    }
    moreau_limit(f, x, opts)
}

/// Refines `∇f_λ(x)` over `λ = λ₀·shrink^k` until successive estimates are
/// closer than `tol_grad`. Ignores any analytic subgradient.
pub fn moreau_limit(
    f: &(impl ConvexFn + ?Sized),
    x: &Point,
    opts: &SubgradOptions,
) -> Result<Point> {
    let mut lambda = opts.lambda0;
    let mut prev = moreau_gradient(f, x, lambda)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_levels {
        lambda *= opts.shrink;
        let next = moreau_gradient(f, x, lambda)?;
        last_change = next.distance(&prev);
        prev = next;
        if last_change < opts.tol_grad {
            return Ok(prev);
        }
    }
    Err(Error::SubgradNonConvergence { last_change })
}

/// Central-difference Hessian of `f` at `x`, symmetrised.
pub fn fd_hessian(f: &(impl ConvexFn + ?Sized), x: &Point, h: f64) -> Result<DMatrix<f64>> {
    check_point(f, x)?;
    check_step(h)?;
    let d = f.dim();
    let f0 = f.value(x);
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.clone();
        y[i] += si;
        y[j] += sj;
        f.value(&y)
    };
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut yp = x.clone();
        yp[i] += h;
        let mut ym = x.clone();
        ym[i] -= h;
        hess[(i, i)] = (f.value(&yp) - 2.0 * f0 + f.value(&ym)) / (h * h);
        for j in (i + 1)..d {
            let v = (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h)
                + shifted(i, -h, j, -h))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    Ok(sym)
}
