use crate::error::{Error, Result};

/// `C¹` decreasing transition from `from` at `start` to `to` at `start + 1`,
/// `from + (to − from)·S(t − start)` with the smoothstep `S(τ) = 3τ² − 2τ³`.
///
/// Outside the window the blend is constant. Integrals over the window are
/// closed-form polynomials in `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blend {
    pub start: f64,
    pub from: f64,
    pub to: f64,
}

fn smoothstep(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

// ∫₀^τ S
fn smoothstep_integral(tau: f64) -> f64 {
    tau.powi(3) - 0.5 * tau.powi(4)
}

// ∫₀^τ S²
fn smoothstep_sq_integral(tau: f64) -> f64 {
    1.8 * tau.powi(5) - 2.0 * tau.powi(6) + 4.0 / 7.0 * tau.powi(7)
}

impl Blend {
    pub fn new(from: f64, to: f64, start: f64) -> Result<Self> {
        if !(from > to && to > 0.0) || !from.is_finite() || !start.is_finite() {
            return Err(Error::invalid(format!(
                "blend needs from > to > 0, got from={from}, to={to}"
            )));
        }
        Ok(Blend { start, from, to })
    }

    pub fn end(&self) -> f64 {
        self.start + 1.0
    }

    fn tau(&self, t: f64) -> f64 {
        (t - self.start).clamp(0.0, 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.from + (self.to - self.from) * smoothstep(self.tau(t))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let tau = t - self.start;
        if !(0.0..=1.0).contains(&tau) {
            return 0.0;
        }
        (self.to - self.from) * 6.0 * tau * (1.0 - tau)
    }

    /// `∫_start^t blend`, for `t` in the window (clamped otherwise).
    pub fn integral(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        self.from * tau + (self.to - self.from) * smoothstep_integral(tau)
    }

    /// `∫_start^t blend²`.
    pub fn integral_sq(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        let (a, d) = (self.from, self.to - self.from);
        a * a * tau + 2.0 * a * d * smoothstep_integral(tau) + d * d * smoothstep_sq_integral(tau)
    }
}

/// Smooth decreasing transition from `a` to `b` on `[c, c+1]`.
pub fn blend(a: f64, b: f64, c: f64) -> Result<Blend> {
    Blend::new(a, b, c)
}
