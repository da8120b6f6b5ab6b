//! Low-discrepancy probe sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::Point;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut x, mut scale) = (0.0, inv);
    while i > 0 {
        x += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    x
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ProbeBox {
    /// `[−half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        ProbeBox {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// `n` Halton points in `bx`, shifted modulo 1 by a seeded uniform vector
/// (Cranley–Patterson rotation). The same seed gives the same points.
pub fn halton(n: usize, bx: &ProbeBox, seed: u64) -> Result<Vec<Point>> {
    let d = bx.dim();
    if d == 0 || d > PRIMES.len() || bx.hi.len() != d {
        return Err(Error::invalid(format!("probe box dimension must be in 1..={}", PRIMES.len())));
    }
    if bx.lo.iter().zip(&bx.hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
        return Err(Error::invalid("probe box needs finite lo <= hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    (1..=n as u64)
        .map(|i| {
            let coords = (0..d)
                .map(|j| {
                    let u = (radical_inverse(i, PRIMES[j]) + shift[j]).fract();
                    bx.lo[j] + u * (bx.hi[j] - bx.lo[j])
                })
                .collect();
            Point::new(coords)
        })
        .collect()
}
