use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpflow_core::asymptotics::{cosmic_secants, cp_limit_velocity, cp_min_norm_search, cp_pazy_ratio, SearchBudget};
use cpflow_core::constructions::{build_profile, AlphaSpec, FnSpeed, GridOptions, SchedulePolicy};
use cpflow_core::convex::catalog::reciprocal_potential;
use cpflow_core::convex::{min_norm_subgrad, moreau_limit, prox_point, AbsPlusLinear, Norm, Quadratic, Shifted};
use cpflow_core::determination::{determine, phi_monotonicity};
use cpflow_core::flow::integrate_flow;
use cpflow_core::probes::{halton, ProbeBox};
use cpflow_core::{Catalog, ConvexFn, FlowConfig, Point, Potential1D, SecantConfig, Verdict};

fn pt(v: &[f64]) -> Point {
    Point::from_slice(v).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, half: f64) -> Point {
    Point::new((0..d).map(|_| rng.gen_range(-half..=half)).collect()).unwrap()
}

fn nonsmooth_zoo() -> Vec<Arc<dyn ConvexFn>> {
    let cat = Catalog::standard().unwrap();
    ["quadratic", "quadratic_shifted", "affine", "norm", "abs_plus_linear", "huber", "envelope_abs_plus_linear"]
        .iter()
        .map(|id| cat.get(id).unwrap().f.clone())
        .collect()
}

#[test]
fn convexity_holds_on_catalog_samples() {
    let cat = Catalog::standard().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in cat.entries() {
        for _ in 0..200 {
            let x = random_point(&mut rng, e.dim(), e.sample_half_width);
            let y = random_point(&mut rng, e.dim(), e.sample_half_width);
            let th: f64 = rng.gen();
            let z = &x.scale(th) + &y.scale(1.0 - th);
            let lhs = e.f.value(&z);
            let rhs = th * e.f.value(&x) + (1.0 - th) * e.f.value(&y);
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            assert!(lhs <= rhs + 1e-9 * scale, "{}: {lhs} > {rhs}", e.id);
        }
    }
}

#[test]
fn speeds_are_monotone_on_catalog_flows() {
    let cat = Catalog::standard().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = FlowConfig::new(0.05, 20.0);
    for e in cat.entries().iter().filter(|e| e.id != "counterexample2d") {
        let x = random_point(&mut rng, e.dim(), e.sample_half_width);
        let traj = integrate_flow(e.f.as_ref(), &x, &cfg).unwrap();
        for w in traj.speeds.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "{}: {} -> {}", e.id, w[0], w[1]);
        }
    }
}

#[test]
fn first_order_convergence_in_the_step() {
    // error of x_k = x0/(1+h)^k against x0·e^{-t} at t = 1
    let f = Quadratic::centered(1);
    let x0 = pt(&[1.0]);
    let err = |h: f64| {
        let traj = integrate_flow(&f, &x0, &FlowConfig::new(h, 1.0)).unwrap();
        (traj.last_point()[0] - (-1f64).exp()).abs()
    };
    for h in [0.1, 0.05, 0.025] {
        let ratio = err(h) / err(h / 2.0);
        assert!((1.5..=2.5).contains(&ratio), "h={h}: ratio {ratio}");
    }
}

#[test]
fn energy_residual_halves_with_the_step() {
    let pot = reciprocal_potential(100.0).unwrap();
    let res = |h: f64| {
        let traj = integrate_flow(&pot, &pt(&[0.0]), &FlowConfig::new(h, 10.0)).unwrap();
        cpflow_core::flow::energy_identity_check(&traj)
    };
    let (a, b) = (res(0.02), res(0.01));
    assert!((1.6..=2.4).contains(&(a / b)), "{a} / {b}");
}

#[test]
fn ratio_targets_are_realised() {
    for (alpha, depth) in [
        (AlphaSpec::SquaredExponent, 6),
        (AlphaSpec::Geometric { ratio: 0.5 }, 8),
        (AlphaSpec::Explicit(vec![1.0, 0.3, 0.05, 0.001, 1e-5, 1e-8]), 4),
    ] {
        let s = build_profile(&alpha, &SchedulePolicy::with_depth(depth)).unwrap();
        let mut prev = 0.0;
        for r in &s.rows {
            assert!(r.ratio_achieved >= r.ratio_target / 2.0, "{alpha:?} n={}", r.n);
            if r.n >= 2 {
                assert!(r.alpha * (r.t_n - prev - 1.0) >= 1.0 - 1e-12);
            }
            prev = r.t_n;
        }
    }
}

#[test]
fn phi_gap_is_flat_for_translates() {
    let cat = Catalog::standard().unwrap();
    for id in ["quadratic", "huber", "potential_reciprocal"] {
        let e = cat.get(id).unwrap();
        let g = Shifted::new(e.f.clone(), 2.5);
        let x0 = Point::new(vec![0.8; e.dim()]).unwrap();
        let trace = phi_monotonicity(e.f.as_ref(), &g, &x0, &FlowConfig::new(0.1, 5.0)).unwrap();
        assert!(trace.values.iter().all(|v| *v < 1e-20), "{id}");
        assert!(trace.min_increment >= -1e-12);
    }
}

#[test]
fn determination_is_sound_on_translates() {
    let cat = Catalog::standard().unwrap();
    for (id, c) in [("quadratic", 3.0), ("norm", -1.25), ("line_neg", 0.5)] {
        let e = cat.get(id).unwrap();
        let g = Shifted::new(e.f.clone(), c);
        let probes = halton(8, &ProbeBox::cube(e.dim(), 2.0), 5).unwrap();
        let rep = determine(e.f.as_ref(), &g, &probes, &Default::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::EqualUpToConstant, "{id}");
        assert!((rep.constant.unwrap() + c).abs() < 1e-10, "{id}");
    }
}

#[test]
fn secants_are_deterministic() {
    let cat = Catalog::standard().unwrap();
    let f = cat.get("separable_quadratic_linear").unwrap().f.clone();
    let run = || {
        let traj = integrate_flow(f.as_ref(), &pt(&[1.0, 1.0]), &FlowConfig::new(0.1, 50.0)).unwrap();
        cosmic_secants(&traj, &SecantConfig::default()).unwrap().to_csv()
    };
    assert_eq!(run(), run());
}

#[test]
fn estimators_agree_up_to_the_start_term() {
    let cat = Catalog::standard().unwrap();
    let cfg = FlowConfig::new(0.1, 200.0);
    for id in ["affine", "abs_plus_linear", "separable_quadratic_linear", "quadratic"] {
        let e = cat.get(id).unwrap();
        let x0 = Point::new(vec![1.0; e.dim()]).unwrap();
        let a = cp_pazy_ratio(e.f.as_ref(), &x0, &cfg).unwrap().p;
        let b = cp_limit_velocity(e.f.as_ref(), &x0, &cfg).unwrap().p;
        let c = cp_min_norm_search(e.f.as_ref(), &[x0.clone()], &SearchBudget::default()).unwrap().p;
        let slack = 2e-3 + 2.0 * x0.norm() / 200.0;
        assert!(a.distance(&b) <= slack, "{id}: {a} vs {b}");
        assert!(b.distance(&c) <= 2e-3, "{id}: {b} vs {c}");
        assert!(b.distance(&e.cp_direction) <= 1e-3, "{id}");
    }
}

#[test]
fn grid_and_closed_form_potentials_agree() {
    let opts = GridOptions { t_pre: 0.5, ..GridOptions::with_t_max(50.0) };
    let pot = Potential1D::from_speed(Arc::new(FnSpeed::reciprocal()), &opts).unwrap();
    let (lo, hi) = pot.valid_range();
    for k in 0..=200 {
        let u = lo.max(0.0) + (hi - lo.max(0.0)) * k as f64 / 200.0;
        assert!((pot.phi(u).unwrap() - ((-u).exp() - 1.0)).abs() < 1e-6, "u={u}");
    }
}

fn small_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_optimal_and_nonexpansive(a in small_vec(2), b in small_vec(2), lam in 0.01f64..3.0) {
        for f in nonsmooth_zoo() {
            let (x, y) = (pt(&a), pt(&b));
            let px = prox_point(f.as_ref(), &x, lam).unwrap();
            let py = prox_point(f.as_ref(), &y, lam).unwrap();
            prop_assert!(px.distance(&py) <= x.distance(&y) + 1e-9, "{f:?}");
            let obj = |u: &Point| f.value(u) + u.distance(&x).powi(2) / (2.0 * lam);
            let best = obj(&px);
            for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [0.6, 0.8]] {
                let u = &px + &pt(&dir).scale(1e-3);
                prop_assert!(best <= obj(&u) + 1e-10, "{f:?}");
            }
        }
    }

    #[test]
    fn moreau_limit_matches_minimal_subgradient(a in small_vec(2)) {
        let x = pt(&a);
        for f in [Arc::new(Norm::new(2)) as Arc<dyn ConvexFn>, Arc::new(AbsPlusLinear), Arc::new(Quadratic::centered(2))] {
            let exact = f.min_subgrad(&x).unwrap();
            let lim = moreau_limit(f.as_ref(), &x, &Default::default()).unwrap();
            prop_assert!(lim.distance(&exact) <= 1e-5, "{f:?} at {x}: {lim} vs {exact}");
        }
    }

    #[test]
    fn semigroup_on_the_grid(a in small_vec(2), k1 in 1usize..40, k2 in 1usize..40) {
        let f = AbsPlusLinear;
        let h = 0.05;
        let x = pt(&a);
        let whole = integrate_flow(&f, &x, &FlowConfig::new(h, h * (k1 + k2) as f64)).unwrap();
        let first = integrate_flow(&f, &x, &FlowConfig::new(h, h * k1 as f64)).unwrap();
        let second = integrate_flow(&f, first.last_point(), &FlowConfig::new(h, h * k2 as f64)).unwrap();
        prop_assert!(whole.last_point().distance(second.last_point()) < 1e-12);
    }

    #[test]
    fn contraction_on_random_pairs(a in small_vec(2), b in small_vec(2)) {
        let f = Catalog::standard().unwrap().get("huber").unwrap().f.clone();
        let rep = cpflow_core::flow::contraction_check(f.as_ref(), &pt(&a), &pt(&b), &FlowConfig::new(0.1, 10.0)).unwrap();
        prop_assert!(rep.max_gap <= 1e-8);
    }

    #[test]
    fn potential_round_trip(t in 0.0f64..100.0) {
        let pot = reciprocal_potential(100.0).unwrap();
        let u = pot.r(t).unwrap();
        prop_assert!((pot.r_inv(u).unwrap() - t).abs() <= 1e-8 * (1.0 + t));
        // Φ(r(t)) = −E(t) with E(t) = ∫₀ᵗ φ²
        let e = 1.0 - 1.0 / (1.0 + t);
        prop_assert!((pot.phi(u).unwrap() + e).abs() < 1e-8);
    }

    #[test]
    fn potential_derivative_is_nondecreasing(u in 0.0f64..4.5, du in 1e-4f64..0.1) {
        let pot = reciprocal_potential(100.0).unwrap();
        prop_assert!(pot.phi_prime(u + du).unwrap() >= pot.phi_prime(u).unwrap());
    }

    #[test]
    fn min_subgrad_is_a_subgradient(a in small_vec(2), b in small_vec(2)) {
        for f in nonsmooth_zoo() {
            let (x, y) = (pt(&a), pt(&b));
            let g = min_norm_subgrad(f.as_ref(), &x).unwrap();
            let lin = f.value(&x) + g.dot(&(&y - &x));
            prop_assert!(f.value(&y) >= lin - 1e-6 * (1.0 + lin.abs()), "{f:?}");
        }
    }
}

#[test]
fn potential_derivative_monotone_on_dense_grid() {
    let pot = reciprocal_potential(100.0).unwrap();
    let (lo, hi) = pot.valid_range();
    let mut last = f64::NEG_INFINITY;
    for k in 0..10_000 {
        let u = lo + (hi - lo) * k as f64 / 9_999.0;
        let d = pot.phi_prime(u).unwrap();
        assert!(d >= last - 1e-15, "u={u}");
        last = d;
    }
}
