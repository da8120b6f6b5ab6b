//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use cpflow_core::asymptotics::{
    cosmic_secants, cp_limit_velocity, cp_min_norm_search, cp_pazy_ratio, limit_velocity_from, SearchBudget,
    TailStart,
};
use cpflow_core::constructions::{build_counterexample, flow_from_origin, AlphaSpec};
use cpflow_core::convex::catalog::reciprocal_potential;
use cpflow_core::convex::{Affine, Shifted};
use cpflow_core::determination::{determine, grad_half_sq_norm, hessian_gradient_identity};
use cpflow_core::flow::{contraction_check, energy_identity_check, integrate_flow, straight_line_check};
use cpflow_core::probes::{halton, ProbeBox};
use cpflow_core::{Catalog, FlowConfig, Point, SecantConfig, Verdict};

type Check = Result<String, String>;

fn pt(v: &[f64]) -> Point {
    Point::from_slice(v).unwrap()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn probes_for(id: &str, dim: usize, half: f64, n: usize, seed: u64) -> Vec<Point> {
    halton(n, &ProbeBox::cube(dim, half), seed)
        .unwrap()
        .into_iter()
        .map(|p| if id == "potential_reciprocal" { pt(&[p[0] + half]) } else { p })
        .collect()
}

fn c1_contraction(cat: &Catalog) -> Check {
    let start = Instant::now();
    let cfg = FlowConfig::new(0.01, 50.0);
    let mut worst: f64 = f64::NEG_INFINITY;
    for (i, e) in cat.entries().iter().enumerate() {
        let pts = halton(20, &ProbeBox::cube(e.dim(), e.sample_half_width), 100 + i as u64).map_err(err)?;
        for pair in pts.chunks(2) {
            let rep = contraction_check(e.f.as_ref(), &pair[0], &pair[1], &cfg).map_err(err)?;
            if rep.max_gap > 1e-8 {
                return Err(format!("{}: gap {:.3e}", e.id, rep.max_gap));
            }
            worst = worst.max(rep.max_gap);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!("runtime {secs:.1} s"));
    }
    Ok(format!("max gap {worst:.2e} over {} entries in {secs:.1} s", cat.entries().len()))
}

fn c2_monotone_speed(cat: &Catalog) -> Check {
    let mut worst_rise: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    for (i, e) in cat.entries().iter().enumerate() {
        let pts = halton(2, &ProbeBox::cube(e.dim(), e.sample_half_width), 200 + i as u64).map_err(err)?;
        let mut limits = Vec::new();
        for x in &pts {
            let traj = integrate_flow(e.f.as_ref(), x, &FlowConfig::new(0.01, 200.0)).map_err(err)?;
            let rise = traj.speeds.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if rise > 1e-8 {
                return Err(format!("{}: speed rises by {rise:.3e}", e.id));
            }
            worst_rise = worst_rise.max(rise);
            limits.push(traj.limit_speed().mean);
        }
        let gap = (limits[0] - limits[1]).abs();
        if gap > 1e-4 {
            return Err(format!("{}: limiting speeds {} vs {}", e.id, limits[0], limits[1]));
        }
        worst_limit = worst_limit.max(gap);
    }
    Ok(format!("max rise {worst_rise:.2e}, max two-start gap {worst_limit:.2e}"))
}

fn c3_energy(cat: &Catalog) -> Check {
    let mut out = Vec::new();
    // unit-distance starts: the residual scales with the squared distance to the minimiser
    for (id, x0) in [("quadratic", pt(&[1.0, 0.0])), ("potential_reciprocal", pt(&[0.0]))] {
        let f = cat.get(id).map_err(err)?.f.clone();
        let res = |h: f64| -> Result<f64, String> {
            let traj = integrate_flow(f.as_ref(), &x0, &FlowConfig::new(h, 10.0)).map_err(err)?;
            Ok(energy_identity_check(&traj))
        };
        let (a, b) = (res(0.01)?, res(0.005)?);
        let ratio = a / b;
        if !(a <= 5e-3) || !(1.6..=2.4).contains(&ratio) {
            return Err(format!("{id}: residual {a:.3e}, ratio {ratio:.3}"));
        }
        out.push(format!("{id} {a:.2e} (ratio {ratio:.2})"));
    }
    Ok(out.join(", "))
}

fn c4_pazy(cat: &Catalog) -> Check {
    let cfg = FlowConfig::new(0.1, 200.0);
    let tol_cp = cpflow_core::asymptotics::TOL_CP;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut worst_pair: f64 = 0.0;
    for id in ["affine", "abs_plus_linear"] {
        let e = cat.get(id).map_err(err)?;
        let starts = halton(10, &ProbeBox::cube(2, e.sample_half_width), 7).map_err(err)?;
        for x0 in &starts {
            let traj = integrate_flow(e.f.as_ref(), x0, &cfg).map_err(err)?;
            let ratio = traj.last_point().scale(-1.0 / traj.horizon());
            let dev = ratio.distance(&e.cp_direction);
            let bound = x0.norm() / 200.0 + 1e-3;
            if dev > bound {
                return Err(format!("{id} from {x0}: {dev:.3e} > {bound:.3e}"));
            }
            worst_excess = worst_excess.max(dev - bound);
        }
        let x_hat = Point::zeros(2);
        let a = cp_pazy_ratio(e.f.as_ref(), &x_hat, &cfg).map_err(err)?.p;
        let b = cp_limit_velocity(e.f.as_ref(), &x_hat, &cfg).map_err(err)?.p;
        let c = cp_min_norm_search(e.f.as_ref(), &starts, &SearchBudget::default()).map_err(err)?.p;
        for (u, v) in [(&a, &b), (&a, &c), (&b, &c)] {
            let d = u.distance(v);
            if d > 2.0 * tol_cp {
                return Err(format!("{id}: estimators {u} and {v} differ by {d:.3e}"));
            }
            worst_pair = worst_pair.max(d);
        }
    }
    Ok(format!(
        "max (deviation - bound) {worst_excess:.2e}, max estimator gap {worst_pair:.2e}"
    ))
}

fn c5_straight_line(cat: &Catalog) -> Check {
    let e = cat.get("abs_plus_linear").map_err(err)?;
    let dev = straight_line_check(e.f.as_ref(), &Point::zeros(2), &e.cp_direction, &FlowConfig::new(0.01, 20.0))
        .map_err(err)?;
    if dev > 1e-9 {
        return Err(format!("deviation {dev:.3e}"));
    }
    Ok(format!("deviation {dev:.2e}"))
}

fn c6_potential() -> Check {
    let pot = reciprocal_potential(100.0).map_err(err)?;
    let hi = pot.r(100.0).map_err(err)?;
    let mut worst_phi: f64 = 0.0;
    for k in 0..=10_000 {
        let u = hi * k as f64 / 10_000.0;
        worst_phi = worst_phi.max((pot.phi(u).map_err(err)? - ((-u).exp() - 1.0)).abs());
    }
    if worst_phi > 1e-6 {
        return Err(format!("Φ error {worst_phi:.3e}"));
    }
    let h = 0.01;
    let traj = integrate_flow(&pot, &pt(&[0.0]), &FlowConfig::new(h, 100.0)).map_err(err)?;
    let worst_speed = traj
        .times
        .iter()
        .zip(&traj.speeds)
        .map(|(t, s)| (s - 1.0 / (1.0 + t)).abs())
        .fold(0.0, f64::max);
    if worst_speed > 5.0 * h {
        return Err(format!("speed profile error {worst_speed:.3e} > {}", 5.0 * h));
    }
    Ok(format!("Φ error {worst_phi:.2e}, speed error {worst_speed:.2e}"))
}

fn c7_counterexample() -> Check {
    let start = Instant::now();
    let ce = build_counterexample(&AlphaSpec::SquaredExponent, 6).map_err(err)?;
    let traj = flow_from_origin(&ce).map_err(err)?;
    let cfg = SecantConfig {
        tail: TailStart::Time(ce.schedule().rows[0].t_n),
        ..SecantConfig::default()
    };
    let set = cosmic_secants(&traj, &cfg).map_err(err)?;
    let (nx, ny) = (set.near_axis(0, 0.15).len(), set.near_axis(1, 0.15).len());
    let p = limit_velocity_from(&ce, &traj, cpflow_core::asymptotics::TOL_CP).p;
    let alpha6 = ce.schedule().alphas[6];
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "oscillating={}, near x/y axis clusters {nx}/{ny}, ‖p‖={:.4e} (bound {:.4e}), {secs:.2} s",
        set.oscillating,
        p.norm(),
        1.1 * alpha6
    );
    if set.oscillating && nx >= 1 && ny >= 1 && nx + ny >= 2 && p.norm() <= 1.1 * alpha6 && secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c8_determination_positive(cat: &Catalog) -> Check {
    let mut out = Vec::new();
    for id in ["quadratic", "abs_plus_linear", "potential_reciprocal"] {
        let e = cat.get(id).map_err(err)?;
        let g = Shifted::new(e.f.clone(), 7.0);
        let probes = probes_for(id, e.dim(), e.sample_half_width, 16, 1);
        let rep = determine(e.f.as_ref(), &g, &probes, &Default::default()).map_err(err)?;
        let c = rep.constant.unwrap_or(f64::NAN);
        if rep.verdict != Verdict::EqualUpToConstant || !((c + 7.0).abs() <= 1e-10) {
            return Err(format!("{id}: {} constant {c}", rep.verdict));
        }
        out.push(format!("{id} {c}"));
    }
    Ok(out.join(", "))
}

fn c9_determination_negative() -> Check {
    let f = Affine::new(pt(&[1.0]), 0.0);
    let g = Affine::new(pt(&[-1.0]), 0.0);
    let probes = halton(16, &ProbeBox::cube(1, 5.0), 1).map_err(err)?;
    let rep = determine(&f, &g, &probes, &Default::default()).map_err(err)?;
    let gap = rep.cp_gap.unwrap_or(f64::NAN);
    let detail = format!("verdict {}, cp_gap {gap}", rep.verdict);
    if rep.verdict == Verdict::CpMismatch && (gap - 2.0).abs() <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c10_hessian_gradient(cat: &Catalog) -> Check {
    let mut worst: f64 = 0.0;
    for id in ["quadratic", "potential_reciprocal"] {
        let e = cat.get(id).map_err(err)?;
        for x in probes_for(id, e.dim(), e.sample_half_width, 20, 3) {
            let r = hessian_gradient_identity(e.f.as_ref(), e.f.as_ref(), &x, 1e-4).map_err(err)?;
            if r.single_residual > 1e-5 {
                return Err(format!("{id} at {x}: residual {:.3e}", r.single_residual));
            }
            worst = worst.max(r.single_residual);
        }
    }
    let pot = reciprocal_potential(100.0).map_err(err)?;
    let spot = grad_half_sq_norm(&pot, &pt(&[1.0]), 1e-4).map_err(err)?[0];
    // ½(Φ′²)′(1) = Φ″(1)Φ′(1) = −e^{−2}
    let target = -(-2f64).exp();
    if (spot - target).abs() > 1e-4 {
        return Err(format!("spot value {spot} vs {target}"));
    }
    Ok(format!("max residual {worst:.2e}, spot {spot:.6} (|·| = e^-2 = {:.6})", -target))
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_cpflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CPFLOW_OUT")
        .output()
        .map_err(err)?;
    match status.status.code() {
        Some(0) | Some(3) | Some(4) => Ok(()),
        c => Err(format!("{args:?} exited with {c:?}: {}", String::from_utf8_lossy(&status.stderr))),
    }
}

fn c11_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let runs: [&[&str]; 4] = [
        &["run-flow", "--fn", "huber", "--x0", "3,-2", "--T", "20", "--seed", "5"],
        &["run-flow", "--fn", "counterexample2d", "--depth", "4"],
        &["run-determine", "--fn", "quadratic", "--gn", "quadratic;c=7", "--seed", "9"],
        &["run-counterexample", "--depth", "6"],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let a = dir.path().join(format!("{i}a"));
        let b = dir.path().join(format!("{i}b"));
        run_cli(args, &a)?;
        run_cli(args, &b)?;
        let mut names: Vec<_> = std::fs::read_dir(&a)
            .map_err(err)?
            .filter_map(|e| e.ok().map(|e| e.file_name()))
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect();
        names.sort();
        if names.is_empty() {
            return Err(format!("{args:?} wrote no CSV"));
        }
        for n in names {
            let x = std::fs::read(a.join(&n)).map_err(err)?;
            let y = std::fs::read(b.join(&n)).map_err(err)?;
            if x != y {
                return Err(format!("{args:?}: {} differs", n.to_string_lossy()));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} CSV files byte-identical across reruns"))
}

fn main() -> ExitCode {
    let cat = Catalog::standard().expect("standard catalog");
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("flow contraction", Box::new(|| c1_contraction(&cat))),
        ("monotone slope decay", Box::new(|| c2_monotone_speed(&cat))),
        ("energy identity", Box::new(|| c3_energy(&cat))),
        ("pazy ratio and estimator agreement", Box::new(|| c4_pazy(&cat))),
        ("attained-direction straight line", Box::new(|| c5_straight_line(&cat))),
        ("1-D potential round trip", Box::new(c6_potential)),
        ("counterexample oscillation", Box::new(c7_counterexample)),
        ("determination positive", Box::new(|| c8_determination_positive(&cat))),
        ("determination negative", Box::new(c9_determination_negative)),
        ("hessian-gradient identity", Box::new(|| c10_hessian_gradient(&cat))),
        ("determinism", Box::new(c11_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
