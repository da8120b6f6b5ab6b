//! Reference values: closed forms computed here, plus frozen outputs of the
//! schedule builder checked against an independent integral oracle.

use cpflow_core::constructions::{build_profile, AlphaSpec, SchedulePolicy};
use cpflow_core::convex::catalog::reciprocal_potential;
use cpflow_core::convex::Affine;
use cpflow_core::determination::{determine, grad_half_sq_norm};
use cpflow_core::{Error, Point, Verdict};

fn pt(v: &[f64]) -> Point {
    Point::from_slice(v).unwrap()
}

// ∫₀ᵗ of a plateau profile: `drops` are (start, from, to) over unit windows,
// and a smoothstep blend integrates to the mean of its end levels.
fn plateau_integral(initial: f64, drops: &[(f64, f64, f64)], t: f64) -> f64 {
    let mut acc = 0.0;
    let mut level = initial;
    let mut at = 0.0;
    for &(c, a, b) in drops {
        if t <= c {
            break;
        }
        acc += level * (c - at);
        if t < c + 1.0 {
            let tau: f64 = t - c;
            let s = tau.powi(3) - 0.5 * tau.powi(4);
            return acc + a * tau + (b - a) * s;
        }
        acc += 0.5 * (a + b);
        level = b;
        at = c + 1.0;
    }
    acc + level * (t - at)
}

#[test]
fn squared_exponent_levels() {
    let a = AlphaSpec::SquaredExponent.sequence(7).unwrap();
    for (n, v) in a.iter().enumerate() {
        assert_eq!(*v, 2f64.powi(-((n * n) as i32)));
    }
}

#[test]
fn schedule_is_frozen() {
    let s = build_profile(&AlphaSpec::SquaredExponent, &SchedulePolicy::default()).unwrap();
    let expected = [2.0, 37.5, 9615.0, 39509692.5, 2589823716450.0, 2.715660672908259e18];
    assert_eq!(s.breakpoints(), expected);
    // first breakpoint: smallest t with α₁·t ≥ 1
    assert_eq!(s.rows[0].t_n * s.alphas[1], 1.0);
    for r in &s.rows {
        let slack = if r.n == 1 { 1.0 } else { 2.0 };
        assert_eq!(r.ratio_achieved, r.ratio_target / slack);
    }
}

#[test]
fn schedule_ratios_match_integral_oracle() {
    let s = build_profile(&AlphaSpec::SquaredExponent, &SchedulePolicy::default()).unwrap();
    let a = &s.alphas;
    let t = s.breakpoints();
    let (mut phi, mut psi) = (Vec::new(), Vec::new());
    let (mut phi_lvl, mut psi_lvl) = (a[0], a[1]);
    for n in 2..=s.depth() {
        let c = t[n - 2];
        if n % 2 == 0 {
            phi.push((c, phi_lvl, a[n]));
            phi_lvl = a[n];
        } else {
            psi.push((c, psi_lvl, a[n]));
            psi_lvl = a[n];
        }
        let ip = plateau_integral(a[0], &phi, t[n - 1]);
        let iq = plateau_integral(a[1], &psi, t[n - 1]);
        let ratio = if n % 2 == 0 { iq / ip } else { ip / iq };
        let got = s.rows[n - 1].ratio_achieved;
        assert!((ratio - got).abs() <= 1e-9 * got, "n={n}: oracle {ratio}, builder {got}");
    }
}

#[test]
fn default_budget_of_1e9_overflows() {
    let policy = SchedulePolicy { t_budget: 1e9, ..SchedulePolicy::default() };
    match build_profile(&AlphaSpec::SquaredExponent, &policy) {
        Err(Error::ScheduleOverflow { n, .. }) => assert_eq!(n, 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn reciprocal_potential_closed_forms() {
    let pot = reciprocal_potential(100.0).unwrap();
    // r(t) = ln(1+t), Φ(u) = e^{−u} − 1
    for t in [0.0, 0.5, 3.0, 42.0, 99.0] {
        let u = pot.r(t).unwrap();
        assert!((u - t.ln_1p()).abs() < 1e-9);
        assert!((pot.phi(u).unwrap() - ((-u).exp() - 1.0)).abs() < 1e-9);
        assert!((pot.phi_prime(u).unwrap() + (-u).exp()).abs() < 1e-9);
        assert!((pot.phi_second(u).unwrap() - (-u).exp()).abs() < 1e-9);
    }
    // ∇(½Φ'²)(1) = Φ''(1)·Φ'(1) = −e^{−2}
    let lhs = grad_half_sq_norm(&pot, &pt(&[1.0]), 1e-4).unwrap();
    assert!((lhs[0] + (-2f64).exp()).abs() < 1e-4, "{}", lhs[0]);
}

#[test]
fn opposite_lines_have_equal_slopes_but_differ() {
    let f = Affine::new(pt(&[1.0]), 0.0);
    let g = Affine::new(pt(&[-1.0]), 0.0);
    let probes: Vec<Point> = [-2.0, -0.5, 0.3, 1.7].iter().map(|x| pt(&[*x])).collect();
    let rep = determine(&f, &g, &probes, &Default::default()).unwrap();
    assert_eq!(rep.slope_audit, 0.0);
    assert_eq!(rep.verdict, Verdict::CpMismatch);
    assert!((rep.cp_gap.unwrap() - 2.0).abs() < 1e-3);
}
