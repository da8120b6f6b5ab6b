//! Fallback proximal solver for functions that only expose values.
//!
//! The prox objective `F(u) = f(u) + ‖u−x‖²/(2λ)` is `1/λ`-strongly convex,
//! so both routes below converge from any start: damped Newton with
//! finite-difference derivatives in `d ≥ 2`, and a bracketing search on the
//! sign of one-sided differences in `d = 1` (which tolerates kinks).

use nalgebra::{DMatrix, DVector};

use super::{ConvexFn, ProxOutput};
use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Accepted norm of the finite-difference gradient of the prox objective,
    /// relative to `1 + ‖x‖/λ`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

pub fn prox_numeric<F: ConvexFn + ?Sized>(
    f: &F,
    x: &Point,
    step: f64,
    opts: &SolverOptions,
) -> Result<ProxOutput> {
    if f.dim() == 1 {
        prox_bisection(f, x, step, opts)
    } else {
        prox_newton(f, x, step, opts)
    }
}

fn objective<F: ConvexFn + ?Sized>(f: &F, x: &Point, step: f64, u: &DVector<f64>) -> f64 {
    let p = Point::raw(u.clone());
    f.value(&p) + (u - x.as_dvector()).norm_squared() / (2.0 * step)
}

fn prox_bisection<F: ConvexFn + ?Sized>(
    f: &F,
    x: &Point,
    step: f64,
    opts: &SolverOptions,
) -> Result<ProxOutput> {
    let fv = |u: f64| f.value(&Point::raw(DVector::from_element(1, u)));
    let x0 = x[0];
    // F(a) − F(b), with the quadratic part differenced in closed form
    let diff = |a: f64, b: f64| (fv(a) - fv(b)) + (a - b) * (a + b - 2.0 * x0) / (2.0 * step);
    // F is convex: the minimiser lies right of m iff F(m + δ) < F(m).
    let descends_right = |m: f64, delta: f64| diff(m + delta, m) < 0.0;
    let descends_left = |m: f64, delta: f64| diff(m - delta, m) < 0.0;
    let scale = 1.0 + x0.abs();
    let probe = 1e-9 * scale;
    let mut width = step.max(1e-3) * scale;
    let mut lo = x0 - width;
    while descends_left(lo, probe) {
        lo -= width;
        width *= 2.0;
        if !lo.is_finite() {
            return Err(Error::ProxNonConvergence { iterations: 0, residual: f64::INFINITY });
        }
    }
    width = step.max(1e-3) * scale;
    let mut hi = x0 + width;
    while descends_right(hi, probe) {
        hi += width;
        width *= 2.0;
        if !hi.is_finite() {
            return Err(Error::ProxNonConvergence { iterations: 0, residual: f64::INFINITY });
        }
    }
    let mut iterations = 0;
    while hi - lo > 1e-14 * scale && iterations < opts.max_iter {
        let m = 0.5 * (lo + hi);
        let delta = ((hi - lo) * 1e-3).max(1e-15 * scale);
        if descends_right(m, delta) {
            lo = m;
        } else if descends_left(m, delta) {
            hi = m;
        } else {
            lo = m - delta;
            hi = m + delta;
        }
        iterations += 1;
    }
    let residual = hi - lo;
    if residual > 1e-10 * scale {
        return Err(Error::ProxNonConvergence {
            iterations,
            residual,
        });
    }
    Ok(ProxOutput {
        point: Point::raw(DVector::from_element(1, 0.5 * (lo + hi))),
        residual,
    })
}

fn fd_gradient<F: ConvexFn + ?Sized>(f: &F, u: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(u.len());
    for i in 0..u.len() {
        let h = 1e-6 * (1.0 + u[i].abs());
        let mut up = u.clone();
        up[i] += h;
        let mut um = u.clone();
        um[i] -= h;
        g[i] = (f.value(&Point::raw(up)) - f.value(&Point::raw(um))) / (2.0 * h);
    }
    g
}

fn fd_hessian_of_gradient<F: ConvexFn + ?Sized>(f: &F, u: &DVector<f64>) -> DMatrix<f64> {
    let d = u.len();
    let mut h = DMatrix::zeros(d, d);
    for j in 0..d {
        let s = 1e-4 * (1.0 + u[j].abs());
        let mut up = u.clone();
        up[j] += s;
        let mut um = u.clone();
        um[j] -= s;
        let col = (fd_gradient(f, &up) - fd_gradient(f, &um)) / (2.0 * s);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}

fn prox_newton<F: ConvexFn + ?Sized>(
    f: &F,
    x: &Point,
    step: f64,
    opts: &SolverOptions,
) -> Result<ProxOutput> {
    let d = f.dim();
    let xv = x.as_dvector();
    let mut u = xv.clone();
    let tol = opts.tol * (1.0 + xv.norm() / step);
    let mut residual = f64::INFINITY;
    for iterations in 0..opts.max_iter {
        let grad = fd_gradient(f, &u) + (&u - xv) / step;
        residual = grad.norm();
        if residual <= tol {
            return Ok(ProxOutput {
                point: Point::raw(u),
                residual,
            });
        }
        let mut hess = fd_hessian_of_gradient(f, &u);
        for i in 0..d {
            hess[(i, i)] += 1.0 / step;
        }
        let dir = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -&grad * step,
        };
        let f0 = objective(f, x, step, &u);
        let slope = grad.dot(&dir);
        let mut t = 1.0;
        loop {
            let cand = &u + &dir * t;
            if objective(f, x, step, &cand) <= f0 + 1e-4 * t * slope || t < 1e-12 {
                u = cand;
                break;
            }
            t *= 0.5;
        }
        if t < 1e-12 && iterations > 10 {
            break;
        }
    }
    Err(Error::ProxNonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
