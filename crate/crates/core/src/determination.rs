//! Executable checks of determination statements: two convex functions
//! with the same slope everywhere and the same Crandall–Pazy direction
//! differ by a constant.
//!
//! Every check samples finitely many probes, so a positive verdict means
//! "no violation found", never a proof.

use std::fmt::{self, Write as _};

use crate::asymptotics::{limit_velocity_from, slope, TOL_CP};
use crate::convex::{fd_hessian, min_norm_subgrad, ConvexFn};
use crate::error::Result;
use crate::flow::{integrate_flow, FlowConfig};
use crate::point::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    EqualUpToConstant,
    CpMismatch,
    SlopeMismatch,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EqualUpToConstant => "equal_up_to_constant",
            Verdict::CpMismatch => "cp_mismatch",
            Verdict::SlopeMismatch => "slope_mismatch",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct DeterminationConfig {
    pub eps_slope: f64,
    pub eps_const: f64,
    pub tol_cp: f64,
    /// Flow used for the direction estimates.
    pub cp_flow: FlowConfig,
    /// Number of probes used as seeds for the direction estimates.
    pub cp_seeds: usize,
    /// Flow along `g` used to push every probe.
    pub push_flow: FlowConfig,
}

impl Default for DeterminationConfig {
    fn default() -> Self {
        DeterminationConfig {
            eps_slope: 1e-5,
            eps_const: 1e-6,
            tol_cp: TOL_CP,
            cp_flow: FlowConfig::new(0.1, 200.0),
            cp_seeds: 3,
            push_flow: FlowConfig::new(0.1, 10.0),
        }
    }
}

/// `|s_f(x) − s_g(x)|` at every probe.
#[derive(Clone, Debug)]
pub struct SlopeAudit {
    pub gaps: Vec<f64>,
    pub max_gap: f64,
}

pub fn audit_slopes(
    f: &(impl ConvexFn + ?Sized),
    g: &(impl ConvexFn + ?Sized),
    probes: &[Point],
) -> Result<SlopeAudit> {
    let gaps = probes
        .iter()
        .map(|x| Ok((slope(f, x)? - slope(g, x)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(SlopeAudit { gaps, max_gap })
}

/// `f(0) − g(0)` and the spread of `f − g` over the probes and their images
/// under the `g`-flow.
#[derive(Clone, Debug)]
pub struct ConstantRecovery {
    pub constant: f64,
    pub spread: f64,
    /// `(x, (f − g)(x))` for the origin, every probe and every pushed probe.
    pub differences: Vec<(Point, f64)>,
}

pub fn recover_constant(
    f: &(impl ConvexFn + ?Sized),
    g: &(impl ConvexFn + ?Sized),
    probes: &[Point],
    push: &FlowConfig,
) -> Result<ConstantRecovery> {
    let origin = Point::zeros(f.dim());
    let constant = f.value(&origin) - g.value(&origin);
    let mut differences = vec![(origin, constant)];
    for x in probes {
        differences.push((x.clone(), f.value(x) - g.value(x)));
        let y = integrate_flow(g, x, push)?.last_point().clone();
        let d = f.value(&y) - g.value(&y);
        differences.push((y, d));
    }
    let (lo, hi) = differences
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, d)| (a.min(*d), b.max(*d)));
    Ok(ConstantRecovery {
        constant,
        spread: hi - lo,
        differences,
    })
}

/// Residuals of `H_f ∇f = ∇(½‖∇f‖²)`.
#[derive(Clone, Debug)]
pub struct HessianGradient {
    /// `‖H_f ∇f − H_g ∇g‖` with finite-difference Hessians.
    pub pair_residual: f64,
    /// `‖∇(½‖∇f‖²) − H_f ∇f‖`, both sides by finite differences.
    pub single_residual: f64,
}

/// Central differences of `x ↦ ½‖∇f(x)‖²`.
pub fn grad_half_sq_norm(f: &(impl ConvexFn + ?Sized), x: &Point, h: f64) -> Result<Point> {
    let mut out = Point::zeros(x.dim());
    for i in 0..x.dim() {
        let mut up = x.clone();
        up[i] += h;
        let mut dn = x.clone();
        dn[i] -= h;
        let a = min_norm_subgrad(f, &up)?.norm_squared();
        let b = min_norm_subgrad(f, &dn)?.norm_squared();
        out[i] = 0.25 * (a - b) / h;
    }
    Ok(out)
}

fn hess_times_grad(f: &(impl ConvexFn + ?Sized), x: &Point, h: f64) -> Result<Point> {
    let hess = fd_hessian(f, x, h)?;
    let g = min_norm_subgrad(f, x)?;
    Point::from_dvector(hess * g.as_dvector())
}

pub fn hessian_gradient_identity(
    f: &(impl ConvexFn + ?Sized),
    g: &(impl ConvexFn + ?Sized),
    x: &Point,
    h: f64,
) -> Result<HessianGradient> {
    let hf = hess_times_grad(f, x, h)?;
    let hg = hess_times_grad(g, x, h)?;
    let lhs = grad_half_sq_norm(f, x, h)?;
    Ok(HessianGradient {
        pair_residual: hf.distance(&hg),
        single_residual: lhs.distance(&hf),
    })
}

/// `φ(t) = ½‖∇f(γ(t)) − ∇g(γ(t))‖²` along the `g`-flow.
#[derive(Clone, Debug)]
pub struct GapTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `min_k φ(t_{k+1}) − φ(t_k)`.
    pub min_increment: f64,
}

pub fn phi_monotonicity(
    f: &(impl ConvexFn + ?Sized),
    g: &(impl ConvexFn + ?Sized),
    x0: &Point,
    cfg: &FlowConfig,
) -> Result<GapTrace> {
    let traj = integrate_flow(g, x0, cfg)?;
    let values = traj
        .points
        .iter()
        .map(|y| Ok(0.5 * (min_norm_subgrad(f, y)? - min_norm_subgrad(g, y)?).norm_squared()))
        .collect::<Result<Vec<f64>>>()?;
    let min_increment = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(GapTrace {
        times: traj.times,
        values,
        min_increment: if min_increment.is_finite() { min_increment } else { 0.0 },
    })
}

#[derive(Clone, Debug)]
pub struct DeterminationReport {
    pub verdict: Verdict,
    /// `f(0) − g(0)`; `None` when the pipeline stopped before recovering it.
    pub constant: Option<f64>,
    pub slope_audit: f64,
    pub cp_gap: Option<f64>,
    pub constancy_spread: Option<f64>,
    pub p_f: Option<Point>,
    pub p_g: Option<Point>,
    pub n_probes: usize,
    pub slope_gaps: Vec<(Point, f64)>,
    pub differences: Vec<(Point, f64)>,
}

impl DeterminationReport {
    /// `key=value` lines, one per field, in a fixed order.
    pub fn to_kv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.16e}"));
        let pt = |v: &Option<Point>| {
            v.as_ref().map_or_else(
                || "none".to_string(),
                |p| p.iter().map(|c| format!("{c:.16e}")).collect::<Vec<_>>().join(","),
            )
        };
        let mut s = String::new();
        let _ = writeln!(s, "verdict={}", self.verdict);
        let _ = writeln!(s, "constant={}", opt(self.constant));
        let _ = writeln!(s, "slope_audit={:.16e}", self.slope_audit);
        let _ = writeln!(s, "cp_gap={}", opt(self.cp_gap));
        let _ = writeln!(s, "constancy_spread={}", opt(self.constancy_spread));
        let _ = writeln!(s, "p_f={}", pt(&self.p_f));
        let _ = writeln!(s, "p_g={}", pt(&self.p_g));
        let _ = writeln!(s, "n_probes={}", self.n_probes);
        let _ = writeln!(s, "note={}", self.note());
        s
    }

    pub fn note(&self) -> String {
        match self.verdict {
            Verdict::EqualUpToConstant => format!("no violation found at {} probes", self.n_probes),
            Verdict::SlopeMismatch => "slopes differ at some probe".into(),
            Verdict::CpMismatch => "slopes agree but the direction estimates differ".into(),
            Verdict::Inconclusive => "slopes and directions agree but f - g is not constant on the probes".into(),
        }
    }

    /// Evidence CSV `kind,x_0..x_{d−1},value` (`kind` is `slope_gap` or
    /// `difference`).
    pub fn evidence_csv(&self) -> String {
        let d = self
            .slope_gaps
            .first()
            .or(self.differences.first())
            .map_or(0, |(x, _)| x.dim());
        let mut s = String::from("kind");
        for i in 0..d {
            let _ = write!(s, ",x_{i}");
        }
        s.push_str(",value\n");
        for (kind, rows) in [("slope_gap", &self.slope_gaps), ("difference", &self.differences)] {
            for (x, v) in rows.iter() {
                s.push_str(kind);
                for c in x.iter() {
                    let _ = write!(s, ",{c:.16e}");
                }
                let _ = writeln!(s, ",{v:.16e}");
            }
        }
        s
    }
}

// minimal norm, ties to the lexicographically smallest
fn merge_estimates(ps: Vec<Point>) -> Point {
    ps.into_iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()).then_with(|| a.lex_cmp(b)))
        .expect("at least one seed")
}

/// Slope audit, then direction estimates, then constant recovery.
pub fn determine(
    f: &(impl ConvexFn + ?Sized),
    g: &(impl ConvexFn + ?Sized),
    probes: &[Point],
    cfg: &DeterminationConfig,
) -> Result<DeterminationReport> {
    let audit = audit_slopes(f, g, probes)?;
    let mut report = DeterminationReport {
        verdict: Verdict::Inconclusive,
        constant: None,
        slope_audit: audit.max_gap,
        cp_gap: None,
        constancy_spread: None,
        p_f: None,
        p_g: None,
        n_probes: probes.len(),
        slope_gaps: probes.iter().cloned().zip(audit.gaps).collect(),
        differences: Vec::new(),
    };
    if !(audit.max_gap <= cfg.eps_slope) {
        report.verdict = Verdict::SlopeMismatch;
        return Ok(report);
    }

    let mut seeds: Vec<Point> = probes.iter().take(cfg.cp_seeds).cloned().collect();
    if seeds.is_empty() {
        seeds.push(Point::zeros(f.dim()));
    }
    let estimate = |h: &dyn Fn(&Point) -> Result<Point>| -> Result<Point> {
        Ok(merge_estimates(seeds.iter().map(h).collect::<Result<Vec<_>>>()?))
    };
    let p_f = estimate(&|x| Ok(limit_velocity_from(f, &integrate_flow(f, x, &cfg.cp_flow)?, cfg.tol_cp).p))?;
    let p_g = estimate(&|x| Ok(limit_velocity_from(g, &integrate_flow(g, x, &cfg.cp_flow)?, cfg.tol_cp).p))?;
    let cp_gap = p_f.distance(&p_g);
    report.cp_gap = Some(cp_gap);
    report.p_f = Some(p_f);
    report.p_g = Some(p_g);
    if !(cp_gap <= 2.0 * cfg.tol_cp) {
        report.verdict = Verdict::CpMismatch;
        return Ok(report);
    }

    let rec = recover_constant(f, g, probes, &cfg.push_flow)?;
    report.constant = Some(rec.constant);
    report.constancy_spread = Some(rec.spread);
    report.differences = rec.differences;
    report.verdict = if rec.spread <= cfg.eps_const {
        Verdict::EqualUpToConstant
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::convex::{AbsPlusLinear, Affine, Norm, Quadratic, Shifted};
    use crate::probes::{halton, ProbeBox};
    use crate::pt;

    fn probes2() -> Vec<Point> {
        halton(16, &ProbeBox::cube(2, 3.0), 11).unwrap()
    }

    #[test]
    fn audit_examples() {
        let q: Arc<dyn ConvexFn> = Arc::new(Quadratic::centered(2));
        let q7 = Shifted::new(q.clone(), 7.0);
        assert!(audit_slopes(q.as_ref(), &q7, &probes2()).unwrap().max_gap <= 1e-6);
        let (f, g) = (Affine::new(pt![1], 0.0), Affine::new(pt![-1], 0.0));
        let probes: Vec<Point> = (-5..=5).map(|i| pt![i]).collect();
        assert_eq!(audit_slopes(&f, &g, &probes).unwrap().max_gap, 0.0);
        let a = Affine::new(pt![1, 0], 0.0);
        let far = vec![pt![3, 3], pt![-4, 1]];
        assert!(audit_slopes(&Quadratic::centered(2), &a, &far).unwrap().max_gap > 1.0);
    }

    #[test]
    fn constant_examples() {
        let q: Arc<dyn ConvexFn> = Arc::new(Quadratic::centered(2));
        let q7 = Shifted::new(q.clone(), 7.0);
        let r = recover_constant(q.as_ref(), &q7, &probes2(), &FlowConfig::new(0.1, 10.0)).unwrap();
        assert_eq!(r.constant, -7.0);
        assert!(r.spread <= 1e-9);
        let (f, g) = (Affine::new(pt![1], 0.0), Affine::new(pt![-1], 0.0));
        let narrow = recover_constant(&f, &g, &[pt![1]], &FlowConfig::new(0.1, 1.0)).unwrap();
        let wide = recover_constant(&f, &g, &[pt![10]], &FlowConfig::new(0.1, 1.0)).unwrap();
        assert!(wide.spread > narrow.spread);
    }

    #[test]
    fn hessian_gradient_quadratic() {
        let q: Arc<dyn ConvexFn> = Arc::new(Quadratic::centered(2));
        let q3 = Shifted::new(q.clone(), 3.0);
        let r = hessian_gradient_identity(q.as_ref(), &q3, &pt![1, 2], 1e-4).unwrap();
        assert!(r.pair_residual <= 1e-6);
        assert!(r.single_residual <= 1e-6);
        let lhs = grad_half_sq_norm(q.as_ref(), &pt![1, 2], 1e-4).unwrap();
        assert!(lhs.distance(&pt![1, 2]) < 1e-8);
    }

    #[test]
    fn monotone_gap_examples() {
        let q: Arc<dyn ConvexFn> = Arc::new(Quadratic::centered(2));
        let q5 = Shifted::new(q.clone(), 5.0);
        let tr = phi_monotonicity(q.as_ref(), &q5, &pt![1, 1], &FlowConfig::new(0.1, 5.0)).unwrap();
        assert!(tr.values.iter().all(|v| *v == 0.0));
        let (f, g) = (Affine::new(pt![1], 0.0), Affine::new(pt![-1], 0.0));
        let tr = phi_monotonicity(&f, &g, &pt![0], &FlowConfig::new(0.1, 5.0)).unwrap();
        assert!(tr.values.iter().all(|v| *v == 2.0));
        assert_eq!(tr.min_increment, 0.0);
        let tr = phi_monotonicity(q.as_ref(), &Norm::new(2), &pt![2, 1], &FlowConfig::new(0.1, 5.0)).unwrap();
        assert_eq!(tr.values.len(), tr.times.len());
    }

    #[test]
    fn determine_examples() {
        let cfg = DeterminationConfig::default();
        let f: Arc<dyn ConvexFn> = Arc::new(AbsPlusLinear);
        let g = Shifted::new(f.clone(), 7.0);
        let r = determine(f.as_ref(), &g, &probes2(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::EqualUpToConstant);
        assert_eq!(r.constant, Some(-7.0));

        let (f, g) = (Affine::new(pt![1], 0.0), Affine::new(pt![-1], 0.0));
        let probes: Vec<Point> = (-3..=3).map(|i| pt![i]).collect();
        let r = determine(&f, &g, &probes, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::CpMismatch);
        assert!((r.cp_gap.unwrap() - 2.0).abs() < 1e-3);

        let r = determine(&Quadratic::centered(2), &Norm::new(2), &probes2(), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::SlopeMismatch);
    }

    #[test]
    fn report_serialisation() {
        let (f, g) = (Affine::new(pt![1], 0.0), Affine::new(pt![-1], 0.0));
        let r = determine(&f, &g, &[pt![0], pt![1]], &DeterminationConfig::default()).unwrap();
        let kv = r.to_kv();
        assert!(kv.starts_with("verdict=cp_mismatch\n"));
        assert!(kv.contains("constant=none\n"));
        let csv = r.evidence_csv();
        assert_eq!(csv.lines().next(), Some("kind,x_0,value"));
        assert_eq!(csv.lines().count(), 3);
    }
}
