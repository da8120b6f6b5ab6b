//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use cpflow_core::constructions::{build_counterexample, AlphaSpec};
use cpflow_core::convex::catalog::reciprocal_potential;
use cpflow_core::{Catalog, ConvexFn, Counterexample2D, Point};

/// A catalog function by id.
pub fn catalog_fn(id: &str) -> Arc<dyn ConvexFn> {
    Catalog::standard()
        .and_then(|c| c.get(id).map(|e| e.f.clone()))
        .expect("catalog id")
}

pub fn reciprocal() -> cpflow_core::Potential1D {
    reciprocal_potential(100.0).expect("reciprocal potential")
}

pub fn counterexample(depth: usize) -> Counterexample2D {
    build_counterexample(&AlphaSpec::SquaredExponent, depth).expect("counterexample")
}

pub fn start(dim: usize) -> Point {
    Point::new((0..dim).map(|i| 1.5 - 0.5 * i as f64).collect()).expect("finite start")
}
