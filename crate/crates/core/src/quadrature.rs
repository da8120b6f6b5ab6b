//! Romberg integration (Richardson-extrapolated trapezoid) with interval
//! splitting when the extrapolation table fails to settle.

const MAX_LEVELS: usize = 12;
const MAX_DEPTH: usize = 30;

/// `∫_a^b f` to absolute tolerance `tol` (best effort below `1e-15·|result|`).
pub fn romberg<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -romberg(f, b, a, tol);
    }
    adaptive(f, a, b, tol, 0)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    match table(f, a, b, tol) {
        Ok(v) => v,
        Err(v) if depth >= MAX_DEPTH => v,
        Err(_) => {
            let m = 0.5 * (a + b);
            adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1)
        }
    }
}

/// Runs the Romberg table; `Err` carries the last diagonal entry when the
/// tolerance was not met.
fn table<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, f64> {
    let mut prev = [0.0f64; MAX_LEVELS];
    let mut cur = [0.0f64; MAX_LEVELS];
    let mut h = b - a;
    prev[0] = 0.5 * h * (f(a) + f(b));
    let mut n_new = 1usize;
    for level in 1..MAX_LEVELS {
        h *= 0.5;
        let mut sum = 0.0;
        for k in 0..n_new {
            sum += f(a + (2 * k + 1) as f64 * h);
        }
        n_new *= 2;
        cur[0] = 0.5 * prev[0] + h * sum;
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            cur[j] = cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0);
        }
        let err = (cur[level] - prev[level - 1]).abs();
        if level >= 3 && err <= tol.max(1e-15 * cur[level].abs()) {
            return Ok(cur[level]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Err(prev[MAX_LEVELS - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        assert!((romberg(&|x: f64| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        assert!((romberg(&|x: f64| x.exp(), 0.0, 1.0, 1e-13) - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((romberg(&|x: f64| 1.0 / (1.0 + x), 0.0, 100.0, 1e-12) - 101f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn reversed_bounds() {
        assert!((romberg(&|x: f64| x, 1.0, 0.0, 1e-12) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn kinked_integrand_splits() {
        let v = romberg(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10);
        assert!((v - (0.045 + 0.245)).abs() < 1e-9);
    }
}
