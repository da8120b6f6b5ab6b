use std::fmt;
use std::sync::Arc;

use super::blend::Blend;
use crate::error::{Error, Result};

/// A positive nonincreasing speed profile `φ : ℝ → (0, ∞)`.
pub trait SpeedFn: Send + Sync + fmt::Debug {
    fn speed(&self, t: f64) -> f64;

    fn speed_derivative(&self, t: f64) -> f64 {
        let h = 1e-5 * (1.0 + t.abs());
        (self.speed(t + h) - self.speed(t - h)) / (2.0 * h)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Speed profile given by a closure.
#[derive(Clone)]
pub struct FnSpeed {
    label: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
}

impl FnSpeed {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FnSpeed {
            label: label.into(),
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    /// `φ(s) = 1/(1+s)`, whose potential is `Φ(u) = e^{−u} − 1` on `u ≥ 0`.
    pub fn reciprocal() -> Self {
        FnSpeed::new("1/(1+s)", |s| 1.0 / (1.0 + s)).with_derivative(|s| -1.0 / ((1.0 + s) * (1.0 + s)))
    }
}

impl fmt::Debug for FnSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnSpeed({})", self.label)
    }
}

impl SpeedFn for FnSpeed {
    fn speed(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn speed_derivative(&self, t: f64) -> f64 {
        match &self.df {
            Some(df) => df(t),
            None => {
                let h = 1e-5 * (1.0 + t.abs());
                (self.speed(t + h) - self.speed(t - h)) / (2.0 * h)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Plateau { start: f64, level: f64 },
    Blend(Blend),
}

impl Piece {
    fn start(&self) -> f64 {
        match self {
            Piece::Plateau { start, .. } => *start,
            Piece::Blend(b) => b.start,
        }
    }

    fn value(&self, t: f64) -> f64 {
        match self {
            Piece::Plateau { level, .. } => *level,
            Piece::Blend(b) => b.value(t),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match self {
            Piece::Plateau { .. } => 0.0,
            Piece::Blend(b) => b.derivative(t),
        }
    }

    fn integral(&self, t: f64) -> f64 {
        match self {
            Piece::Plateau { start, level } => level * (t - start),
            Piece::Blend(b) => b.integral(t),
        }
    }

    fn integral_sq(&self, t: f64) -> f64 {
        match self {
            Piece::Plateau { start, level } => level * level * (t - start),
            Piece::Blend(b) => b.integral_sq(t),
        }
    }
}

/// Piecewise speed profile: constant plateaus joined by unit-width smoothstep
/// blends. Defined on all of `ℝ`: the first level extends to `t < 0`, the last
/// plateau extends to `+∞`.
///
/// `∫₀ᵗ φ` and `∫₀ᵗ φ²` are exact (closed form on every piece), which keeps
/// them accurate at the doubly-exponential time scales of the oscillating
/// construction where no quadrature grid could resolve the blends.
#[derive(Clone, Debug)]
pub struct SpeedProfile {
    pieces: Vec<Piece>,
    cum: Vec<f64>,
    cum_sq: Vec<f64>,
}

impl SpeedProfile {
    pub fn constant(level: f64) -> Result<Self> {
        Self::from_drops(level, &[])
    }

    /// Starts at `initial` and, for every `(c, level)`, blends down to `level`
    /// on `[c, c+1]`. Breakpoints must satisfy `c₁ ≥ 0` and `c_{k+1} ≥ c_k + 1`.
    pub fn from_drops(initial: f64, drops: &[(f64, f64)]) -> Result<Self> {
        if !(initial > 0.0 && initial.is_finite()) {
            return Err(Error::invalid(format!("speed level must be > 0, got {initial}")));
        }
        let mut pieces = vec![Piece::Plateau {
            start: 0.0,
            level: initial,
        }];
        let mut level = initial;
        let mut last_end = 0.0;
        for &(c, next) in drops {
            if !(c >= last_end) {
                return Err(Error::invalid(format!(
                    "blend at {c} overlaps the previous window ending at {last_end}"
                )));
            }
            let b = Blend::new(level, next, c)?;
            pieces.push(Piece::Blend(b));
            pieces.push(Piece::Plateau {
                start: b.end(),
                level: next,
            });
            level = next;
            last_end = b.end();
        }
        let mut cum = Vec::with_capacity(pieces.len());
        let mut cum_sq = Vec::with_capacity(pieces.len());
        let (mut acc, mut acc_sq) = (0.0, 0.0);
        for (i, p) in pieces.iter().enumerate() {
            cum.push(acc);
            cum_sq.push(acc_sq);
            if let Some(next) = pieces.get(i + 1) {
                match p {
                    // a blend always spans exactly one unit, even when the
                    // breakpoint is too large for `c + 1` to be representable
                    Piece::Blend(b) => {
                        acc += b.integral(f64::INFINITY);
                        acc_sq += b.integral_sq(f64::INFINITY);
                    }
                    _ => {
                        acc += p.integral(next.start());
                        acc_sq += p.integral_sq(next.start());
                    }
                }
            }
        }
        Ok(SpeedProfile {
            pieces,
            cum,
            cum_sq,
        })
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.start() <= t).saturating_sub(1)
    }

    pub fn initial_level(&self) -> f64 {
        self.pieces[0].value(0.0)
    }

    pub fn final_level(&self) -> f64 {
        match self.pieces.last() {
            Some(Piece::Plateau { level, .. }) => *level,
            _ => unreachable!("profiles end with a plateau"),
        }
    }

    /// Plateau levels in order.
    pub fn levels(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Plateau { level, .. } => Some(*level),
                _ => None,
            })
            .collect()
    }

    /// Starts of the blend windows.
    pub fn blend_starts(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Blend(b) => Some(b.start),
                _ => None,
            })
            .collect()
    }

    /// Plateaus as `(start, end, level)`, the last one with `end = +∞`.
    pub fn plateaus(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if let Piece::Plateau { start, level } = p {
                let end = self.pieces.get(i + 1).map_or(f64::INFINITY, |n| n.start());
                out.push((*start, end, *level));
            }
        }
        out
    }

    /// `∫₀ᵗ φ` (negative for `t < 0`).
    pub fn integral(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.initial_level() * t;
        }
        let i = self.piece_index(t);
        self.cum[i] + self.pieces[i].integral(t)
    }

    /// `∫₀ᵗ φ²`.
    pub fn integral_sq(&self, t: f64) -> f64 {
        if t < 0.0 {
            let l = self.initial_level();
            return l * l * t;
        }
        let i = self.piece_index(t);
        self.cum_sq[i] + self.pieces[i].integral_sq(t)
    }

    /// Inverse of [`integral`](Self::integral).
    pub fn inverse_integral(&self, u: f64) -> f64 {
        if u < 0.0 {
            return u / self.initial_level();
        }
        let i = self.cum.partition_point(|&c| c <= u).saturating_sub(1);
        match self.pieces[i] {
            Piece::Plateau { start, level } => start + (u - self.cum[i]) / level,
            Piece::Blend(b) => {
                let target = u - self.cum[i];
                let (mut lo, mut hi) = (b.start, b.start + 1.0);
                let mut s = b.start + target / b.value(b.start + 0.5);
                for _ in 0..100 {
                    if !(s > lo && s < hi) {
                        s = 0.5 * (lo + hi);
                    }
                    let g = b.integral(s) - target;
                    if g > 0.0 {
                        hi = s;
                    } else {
                        lo = s;
                    }
                    if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) || g == 0.0 {
                        break;
                    }
                    s -= g / b.value(s);
                }
                s.clamp(lo, hi)
            }
        }
    }
}

impl SpeedFn for SpeedProfile {
    fn speed(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.initial_level();
        }
        let i = self.piece_index(t);
        self.pieces[i].value(t)
    }

    fn speed_derivative(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let i = self.piece_index(t);
        self.pieces[i].derivative(t)
    }
}

/// The sequence of plateau levels `α₀ > α₁ > …`.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaSpec {
    /// `α_n = 2^{−n²}`.
    SquaredExponent,
    /// `α_n = ratioⁿ`, `0 < ratio < 1`.
    Geometric { ratio: f64 },
    Explicit(Vec<f64>),
}

impl AlphaSpec {
    /// First `len` terms, validated positive and strictly decreasing.
    pub fn sequence(&self, len: usize) -> Result<Vec<f64>> {
        let seq: Vec<f64> = match self {
            AlphaSpec::SquaredExponent => (0..len).map(|n| (-((n * n) as f64)).exp2()).collect(),
            AlphaSpec::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::invalid(format!(
                        "geometric ratio must be in (0, 1), got {ratio}"
                    )));
                }
                (0..len).map(|n| ratio.powi(n as i32)).collect()
            }
            AlphaSpec::Explicit(v) => {
                if v.len() < len {
                    return Err(Error::invalid(format!(
                        "alpha sequence has {} terms, {len} needed",
                        v.len()
                    )));
                }
                v[..len].to_vec()
            }
        };
        if seq.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("alpha terms must be positive and finite"));
        }
        if seq.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("alpha must be strictly decreasing"));
        }
        Ok(seq)
    }
}

#[derive(Clone, Debug)]
pub struct SchedulePolicy {
    /// Number of scheduled breakpoints `t₁ … t_{n_max}`.
    pub n_max: usize,
    /// No breakpoint may exceed this flow time.
    pub t_budget: f64,
    /// Each breakpoint meets `ratio ≥ target / ratio_slack`.
    pub ratio_slack: f64,
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        SchedulePolicy {
            n_max: 6,
            t_budget: 1e20,
            ratio_slack: 2.0,
        }
    }
}

impl SchedulePolicy {
    pub fn with_depth(n_max: usize) -> Self {
        SchedulePolicy {
            n_max,
            ..Default::default()
        }
    }
}

/// One scheduled breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleRow {
    pub n: usize,
    pub alpha: f64,
    pub t_n: f64,
    pub ratio_achieved: f64,
    pub ratio_target: f64,
}

/// The paired profiles `(φ, ψ)` with their alternating breakpoint schedule.
///
/// For `n = 1` both profiles are flat (`φ = α₀`, `ψ = α₁`) on `[0, t₁]`.
/// At step `n ≥ 2` one profile drops to `α_n` on `[t_{n−1}, t_{n−1}+1]` (`φ`
/// for even `n`, `ψ` for odd `n`) while the other holds `α_{n−1}`; `t_n` is
/// the smallest time with unit mass `α_n·(t_n − t_{n−1} − 1) ≥ 1` whose
/// integral ratio (holder over dropper) reaches `α_{n−1}/α_n` within the
/// slack factor. After `t_{n_max}` the holder drops to `α_{n_max+1}`, so both
/// speeds are at most `α_{n_max}` from [`horizon`](Schedule::horizon) on.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub alphas: Vec<f64>,
    pub rows: Vec<ScheduleRow>,
    pub phi: SpeedProfile,
    pub psi: SpeedProfile,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t_n).collect()
    }

    pub fn last_breakpoint(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t_n)
    }

    /// End of the closing blend, padded so that it stays past the blend
    /// window even where `t + 1` rounds to `t`.
    pub fn horizon(&self) -> f64 {
        let t = self.last_breakpoint();
        t + 1.0 + t * (-20f64).exp2()
    }

    /// Whether the ratio targets stay bounded (no growth across the
    /// schedule): the oscillation witness is then weak.
    pub fn ratio_targets_bounded(&self) -> bool {
        let first = self.rows.first().map_or(1.0, |r| r.ratio_target);
        let last = self.rows.last().map_or(1.0, |r| r.ratio_target);
        self.rows.len() < 2 || last < 2.0 * first
    }

    /// CSV dump: `n,alpha,t_n,ratio_achieved,ratio_target`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,alpha,t_n,ratio_achieved,ratio_target\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.n, r.alpha, r.t_n, r.ratio_achieved, r.ratio_target
            ));
        }
        s
    }
}

fn drops_profile(initial: f64, drops: &[(f64, f64)]) -> SpeedProfile {
    SpeedProfile::from_drops(initial, drops).expect("schedule drops are validated")
}

/// Builds the alternating schedule and the paired profiles.
pub fn build_profile(alpha: &AlphaSpec, policy: &SchedulePolicy) -> Result<Schedule> {
    if policy.n_max < 1 {
        return Err(Error::invalid("need >= 2 plateaus (depth >= 1)"));
    }
    if !(policy.ratio_slack >= 1.0) {
        return Err(Error::invalid("ratio slack must be >= 1"));
    }
    let alphas = alpha.sequence(policy.n_max + 2)?;
    let mut phi_drops: Vec<(f64, f64)> = Vec::new();
    let mut psi_drops: Vec<(f64, f64)> = Vec::new();
    let mut rows: Vec<ScheduleRow> = Vec::with_capacity(policy.n_max);
    let mut prev_t = 0.0;

    for n in 1..=policy.n_max {
        let target = alphas[n - 1] / alphas[n];
        let threshold = target / policy.ratio_slack;
        let phi_drops_n = phi_drops.clone();
        let psi_drops_n = psi_drops.clone();
        let (mut phi_n, mut psi_n) = (phi_drops_n, psi_drops_n);
        let lower = if n == 1 {
            1.0 / alphas[1]
        } else {
            if n % 2 == 0 {
                phi_n.push((prev_t, alphas[n]));
            } else {
                psi_n.push((prev_t, alphas[n]));
            }
            prev_t + 1.0 + 1.0 / alphas[n]
        };
        let phi = drops_profile(alphas[0], &phi_n);
        let psi = drops_profile(alphas[1], &psi_n);
        // holder over dropper; for n = 1 this is α₀/α₁ at every t
        let ratio = |t: f64| {
            let (a, b) = (phi.integral(t), psi.integral(t));
            if n % 2 == 1 {
                a / b
            } else {
                b / a
            }
        };
        let t_n = if ratio(lower) >= threshold {
            lower
        } else {
            let mut lo = lower;
            let mut delta = (lower - prev_t).max(1.0);
            let mut hi = lower + delta;
            while ratio(hi) < threshold {
                lo = hi;
                delta *= 2.0;
                hi = lower + delta;
                if hi > policy.t_budget {
                    return Err(Error::ScheduleOverflow {
                        n,
                        budget: policy.t_budget,
                    });
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ratio(mid) >= threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        if t_n > policy.t_budget {
            return Err(Error::ScheduleOverflow {
                n,
                budget: policy.t_budget,
            });
        }
        rows.push(ScheduleRow {
            n,
            alpha: alphas[n],
            t_n,
            ratio_achieved: ratio(t_n),
            ratio_target: target,
        });
        phi_drops = phi_n;
        psi_drops = psi_n;
        prev_t = t_n;
    }

    // closing drop of the holder
    let closing = policy.n_max + 1;
    if closing % 2 == 0 {
        phi_drops.push((prev_t, alphas[closing]));
    } else {
        psi_drops.push((prev_t, alphas[closing]));
    }
    Ok(Schedule {
        phi: drops_profile(alphas[0], &phi_drops),
        psi: drops_profile(alphas[1], &psi_drops),
        alphas,
        rows,
    })
}
