//! Closed-form convex functions used as oracles.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ConvexFn, ProxOutput};
use crate::error::{Error, Result};
use crate::point::Point;

/// `½‖x − a‖²`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub center: Point,
}

impl Quadratic {
    pub fn new(center: Point) -> Self {
        Quadratic { center }
    }

    pub fn centered(dim: usize) -> Self {
        Quadratic {
            center: Point::zeros(dim),
        }
    }
}

impl ConvexFn for Quadratic {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * (x.as_dvector() - self.center.as_dvector()).norm_squared()
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let p = (x.as_dvector() + self.center.as_dvector() * step) / (1.0 + step);
        Ok(ProxOutput::exact(Point::raw(p)))
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        Some(x - &self.center)
    }

    fn hessian(&self, _x: &Point) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim(), self.dim()))
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// `⟨a, x⟩ + b`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub slope: Point,
    pub offset: f64,
}

impl Affine {
    pub fn new(slope: Point, offset: f64) -> Self {
        Affine { slope, offset }
    }
}

impl ConvexFn for Affine {
    fn dim(&self) -> usize {
        self.slope.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        self.slope.dot(x.as_dvector()) + self.offset
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        Ok(ProxOutput::exact(x - &self.slope.scale(step)))
    }

    fn min_subgrad(&self, _x: &Point) -> Option<Point> {
        Some(self.slope.clone())
    }

    fn hessian(&self, _x: &Point) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim(), self.dim()))
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// Euclidean norm `‖x‖`.
#[derive(Clone, Debug)]
pub struct Norm {
    dim: usize,
}

impl Norm {
    pub fn new(dim: usize) -> Self {
        Norm { dim: dim.max(1) }
    }
}

impl ConvexFn for Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> f64 {
        x.norm()
    }

    /// Block soft-thresholding.
    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let n = x.norm();
        if n <= step {
            return Ok(ProxOutput::exact(Point::zeros(self.dim)));
        }
        Ok(ProxOutput::exact(x.scale(1.0 - step / n)))
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let n = x.norm();
        if n == 0.0 {
            Some(Point::zeros(self.dim))
        } else {
            Some(x.scale(1.0 / n))
        }
    }
}

/// `(x, y) ↦ x + |y|` on `ℝ²`.
///
/// Its Crandall–Pazy direction `(1, 0)` is attained on the whole axis `y = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct AbsPlusLinear;

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

impl ConvexFn for AbsPlusLinear {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Point) -> f64 {
        x[0] + x[1].abs()
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let p = Point::raw(DVector::from_vec(vec![x[0] - step, soft_threshold(x[1], step)]));
        Ok(ProxOutput::exact(p))
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let s = if x[1] == 0.0 { 0.0 } else { x[1].signum() };
        Some(Point::raw(DVector::from_vec(vec![1.0, s])))
    }
}

/// `f + c`.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub inner: Arc<dyn ConvexFn>,
    pub constant: f64,
}

impl Shifted {
    pub fn new(inner: Arc<dyn ConvexFn>, constant: f64) -> Self {
        Shifted { inner, constant }
    }
}

impl ConvexFn for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        self.inner.value(x) + self.constant
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        self.inner.prox(x, step)
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        self.inner.min_subgrad(x)
    }

    fn hessian(&self, x: &Point) -> Option<DMatrix<f64>> {
        self.inner.hessian(x)
    }

    fn is_differentiable(&self) -> bool {
        self.inner.is_differentiable()
    }

    fn has_proper_domain(&self) -> bool {
        self.inner.has_proper_domain()
    }

    fn in_domain(&self, x: &Point) -> bool {
        self.inner.in_domain(x)
    }
}

/// Moreau envelope `f_μ(x) = min_u f(u) + ‖u−x‖²/(2μ)`, a `C^{1,1}` convex function.
#[derive(Clone, Debug)]
pub struct MoreauEnvelope {
    pub inner: Arc<dyn ConvexFn>,
    pub mu: f64,
}

impl MoreauEnvelope {
    pub fn new(inner: Arc<dyn ConvexFn>, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("envelope parameter must be > 0, got {mu}")));
        }
        Ok(MoreauEnvelope { inner, mu })
    }
}

impl ConvexFn for MoreauEnvelope {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> f64 {
        match self.inner.prox(x, self.mu) {
            Ok(p) => self.inner.value(&p.point) + (x - &p.point).norm_squared() / (2.0 * self.mu),
            Err(_) => f64::NAN,
        }
    }

    // prox_{λ f_μ}(x) = x + λ/(λ+μ)·(prox_{(λ+μ) f}(x) − x)
    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let inner = self.inner.prox(x, step + self.mu)?;
        let w = step / (step + self.mu);
        let p = x + &(&inner.point - x).scale(w);
        Ok(ProxOutput {
            point: p,
            residual: inner.residual,
        })
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let p = self.inner.prox(x, self.mu).ok()?;
        Some((x - &p.point).scale(1.0 / self.mu))
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// `x ↦ Σᵢ fᵢ(x_{Bᵢ})` over consecutive coordinate blocks.
#[derive(Clone, Debug)]
pub struct SeparableSum {
    parts: Vec<Arc<dyn ConvexFn>>,
    offsets: Vec<usize>,
    dim: usize,
}

impl SeparableSum {
    pub fn new(parts: Vec<Arc<dyn ConvexFn>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("separable sum needs at least one part"));
        }
        let mut offsets = Vec::with_capacity(parts.len());
        let mut dim = 0;
        for p in &parts {
            offsets.push(dim);
            dim += p.dim();
        }
        Ok(SeparableSum {
            parts,
            offsets,
            dim,
        })
    }

    pub fn parts(&self) -> &[Arc<dyn ConvexFn>] {
        &self.parts
    }

    pub(crate) fn block(&self, x: &Point, i: usize) -> Point {
        let start = self.offsets[i];
        let len = self.parts[i].dim();
        Point::raw(DVector::from_column_slice(&x.as_slice()[start..start + len]))
    }

    fn assemble(&self, blocks: Vec<Point>) -> Point {
        let mut out = Vec::with_capacity(self.dim);
        for b in blocks {
            out.extend_from_slice(b.as_slice());
        }
        Point::raw(DVector::from_vec(out))
    }
}

impl ConvexFn for SeparableSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> f64 {
        (0..self.parts.len())
            .map(|i| self.parts[i].value(&self.block(x, i)))
            .sum()
    }

    fn prox(&self, x: &Point, step: f64) -> Result<ProxOutput> {
        let mut blocks = Vec::with_capacity(self.parts.len());
        let mut residual: f64 = 0.0;
        for (i, part) in self.parts.iter().enumerate() {
            let out = part.prox(&self.block(x, i), step)?;
            residual = residual.max(out.residual);
            blocks.push(out.point);
        }
        Ok(ProxOutput {
            point: self.assemble(blocks),
            residual,
        })
    }

    fn min_subgrad(&self, x: &Point) -> Option<Point> {
        let blocks = (0..self.parts.len())
            .map(|i| self.parts[i].min_subgrad(&self.block(x, i)))
            .collect::<Option<Vec<_>>>()?;
        Some(self.assemble(blocks))
    }

    fn hessian(&self, x: &Point) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (i, part) in self.parts.iter().enumerate() {
            let hi = part.hessian(&self.block(x, i))?;
            let o = self.offsets[i];
            h.view_mut((o, o), (part.dim(), part.dim())).copy_from(&hi);
        }
        Some(h)
    }

    fn is_differentiable(&self) -> bool {
        self.parts.iter().all(|p| p.is_differentiable())
    }
}
