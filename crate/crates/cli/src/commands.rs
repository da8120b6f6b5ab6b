use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;

use cpflow_core::asymptotics::{cosmic_secants, limit_velocity_from, pazy_ratio_from, TailStart};
use cpflow_core::constructions::{build_profile, flow_from_origin, CheckpointOptions, SchedulePolicy};
use cpflow_core::determination::determine;
use cpflow_core::flow::integrate_flow;
use cpflow_core::probes::{halton, ProbeBox};
use cpflow_core::{Counterexample2D, DeterminationConfig, FlowConfig, Point, SecantConfig, SecantSet, Trajectory, Verdict};

use crate::config::{usage, ExperimentConfig};
use crate::fnspec;
use crate::svg::{Plot, Series};

fn write(out: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_point(p: &Point) -> String {
    p.iter().map(|c| format!("{c:.6e}")).collect::<Vec<_>>().join(",")
}

fn speed_plot(traj: &Trajectory, log_axes: bool) -> Plot {
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.speeds)
        .filter(|(t, s)| !log_axes || (**t > 0.0 && **s > 0.0))
        .map(|(t, s)| if log_axes { (t.log10(), s.log10()) } else { (*t, *s) })
        .collect();
    let (xl, yl) = if log_axes {
        ("log10 t", "log10 speed")
    } else {
        ("t", "speed")
    };
    Plot::new("speed along the flow", xl, yl).with(Series::line("|∂°f(x(t))|", pts))
}

fn secant_plot(set: &SecantSet) -> Plot {
    let pts = set
        .samples
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(t, u)| (t.log10(), u[1].atan2(u[0]).to_degrees()))
        .collect();
    Plot::new("secant direction angle", "log10 t", "angle (degrees)").with(Series::dots("secant", pts))
}

fn secant_config(cfg: &ExperimentConfig, ce: &Counterexample2D) -> SecantConfig {
    SecantConfig {
        cluster_tol: cfg.cluster_tol,
        escape_radius: cfg.escape_radius,
        tail: TailStart::Time(ce.schedule().rows[0].t_n),
        ..SecantConfig::default()
    }
}

fn secant_summary(s: &mut String, set: &SecantSet) {
    let _ = writeln!(s, "oscillating={}", set.oscillating);
    let _ = writeln!(s, "clusters={}", set.directions.len());
    for (i, d) in set.directions.iter().enumerate() {
        let _ = writeln!(s, "cluster_{i}={}", fmt_point(d));
    }
    let _ = writeln!(s, "near_x_axis={}", set.near_axis(0, 0.15).len());
    let _ = writeln!(s, "near_y_axis={}", set.near_axis(1, 0.15).len());
}

pub fn run_flow(cfg: &ExperimentConfig, depth_flag: bool) -> anyhow::Result<i32> {
    let mut spec = cfg.f.clone().expect("checked by the caller");
    if depth_flag && spec.split(';').next() == Some("counterexample2d") && !spec.contains("depth=") {
        spec.push_str(&format!(";depth={}", cfg.depth));
    }
    let built = fnspec::build(&spec)?;
    let d = built.f.dim();
    let x0 = match &cfg.x0 {
        None => Point::zeros(d),
        Some(x) if x.dim() == d => x.clone(),
        Some(x) => return usage(format!("x0 has {} coordinates, {} has {d}", x.dim(), built.label))?,
    };
    let flow_cfg = match &built.counterexample {
        Some(ce) => {
            let horizon = cfg.horizon.unwrap_or(ce.horizon());
            FlowConfig::with_grid(ce.checkpoints(horizon, &CheckpointOptions::default()))
        }
        None => FlowConfig::new(cfg.step, cfg.horizon.unwrap_or(50.0)),
    };
    let traj = integrate_flow(built.f.as_ref(), &x0, &flow_cfg)?;
    let pazy = pazy_ratio_from(&traj, cfg.tol_cp);
    let lv = limit_velocity_from(built.f.as_ref(), &traj, cfg.tol_cp);
    let limit = traj.limit_speed();

    let mut cp_csv = pazy.to_csv();
    cp_csv.push_str(lv.to_csv().split_once('\n').map_or("", |(_, rows)| rows));

    let mut summary = String::new();
    let _ = writeln!(summary, "experiment={}", cfg.experiment);
    let _ = writeln!(summary, "fn={}", built.label);
    let _ = writeln!(summary, "x0={}", fmt_point(&x0));
    let _ = writeln!(summary, "horizon={:.6e}", traj.horizon());
    let _ = writeln!(summary, "points={}", traj.len());
    let _ = writeln!(summary, "final_slope={:.6e}", traj.speeds[traj.len() - 1]);
    let _ = writeln!(summary, "limit_speed={:.6e}", limit.mean);
    let _ = writeln!(summary, "limit_speed_drift={:.3e}", limit.drift);
    if limit.drifting() {
        eprintln!("warning: speed still drifting over the last decile ({:.3e})", limit.drift);
    }
    let _ = writeln!(summary, "cp_pazy_ratio={}", fmt_point(&pazy.p));
    let _ = writeln!(summary, "cp_limit_velocity={}", fmt_point(&lv.p));
    if let Some(p) = &built.cp_direction {
        let _ = writeln!(summary, "cp_known={}", fmt_point(p));
    }

    write(&cfg.out, "trajectory.csv", &traj.to_csv())?;
    write(&cfg.out, "cp.csv", &cp_csv)?;
    write(&cfg.out, "speed.svg", &speed_plot(&traj, built.counterexample.is_some()).to_svg())?;
    if let Some(ce) = &built.counterexample {
        let set = cosmic_secants(&traj, &secant_config(cfg, ce))?;
        secant_summary(&mut summary, &set);
        write(&cfg.out, "secants.csv", &set.to_csv())?;
        write(&cfg.out, "secants.svg", &secant_plot(&set).to_svg())?;
    }
    print!("{summary}");
    Ok(0)
}

pub fn run_determine(cfg: &ExperimentConfig) -> anyhow::Result<i32> {
    let f = fnspec::build(cfg.f.as_deref().expect("checked by the caller"))?;
    let g = fnspec::build(cfg.g.as_deref().expect("checked by the caller"))?;
    let d = f.f.dim();
    if g.f.dim() != d {
        return usage(format!("{} has dimension {d}, {} has {}", f.label, g.label, g.f.dim()))?;
    }
    let probes = halton(cfg.probes, &ProbeBox::cube(d, cfg.probe_half), cfg.seed)?;
    let dcfg = DeterminationConfig {
        eps_slope: cfg.eps_slope,
        eps_const: cfg.eps_const,
        tol_cp: cfg.tol_cp,
        cp_flow: FlowConfig::new(cfg.step, cfg.horizon.unwrap_or(200.0)),
        ..DeterminationConfig::default()
    };
    let rep = determine(f.f.as_ref(), g.f.as_ref(), &probes, &dcfg)?;
    let mut kv = format!("experiment={}\nfn={}\ngn={}\nseed={}\n", cfg.experiment, f.label, g.label, cfg.seed);
    kv.push_str(&rep.to_kv());
    write(&cfg.out, "report.txt", &kv)?;
    write(&cfg.out, "evidence.csv", &rep.evidence_csv())?;
    print!("{kv}");
    Ok(match rep.verdict {
        Verdict::EqualUpToConstant => 0,
        Verdict::SlopeMismatch | Verdict::CpMismatch => 3,
        Verdict::Inconclusive => 4,
    })
}

pub fn run_counterexample(cfg: &ExperimentConfig) -> anyhow::Result<i32> {
    let schedule = build_profile(&cfg.alpha, &SchedulePolicy::with_depth(cfg.depth))?;
    let bounded = schedule.ratio_targets_bounded();
    if bounded {
        eprintln!("warning: ratio targets bounded, oscillation witness weak");
    }
    let ce = Counterexample2D::new(schedule)?;
    let traj = flow_from_origin(&ce)?;
    let set = cosmic_secants(&traj, &secant_config(cfg, &ce))?;
    let cp = limit_velocity_from(&ce, &traj, cfg.tol_cp);
    let rows = &ce.schedule().rows;

    let mut report = String::new();
    let _ = writeln!(report, "experiment={}", cfg.experiment);
    let _ = writeln!(report, "depth={}", ce.depth());
    let _ = writeln!(report, "alpha={:?}", cfg.alpha);
    let _ = writeln!(report, "horizon={:.6e}", ce.horizon());
    let _ = writeln!(report, "checkpoints={}", traj.len());
    let _ = writeln!(report, "ratio_targets_bounded={bounded}");
    let _ = writeln!(
        report,
        "ratio_achieved={}",
        rows.iter().map(|r| format!("{}", r.ratio_achieved)).collect::<Vec<_>>().join(",")
    );
    secant_summary(&mut report, &set);
    let _ = writeln!(report, "cp_estimate={}", fmt_point(&cp.p));
    let _ = writeln!(report, "cp_norm={:.6e}", cp.p.norm());
    let _ = writeln!(report, "alpha_last={:.6e}", rows.last().map_or(0.0, |r| r.alpha));

    let profile = |which: usize| -> Vec<(f64, f64)> {
        traj.times
            .iter()
            .filter(|t| **t > 0.0)
            .map(|&t| {
                let v = if which == 0 { ce.phi().speed(t) } else { ce.psi().speed(t) };
                (t.log10(), v.log2())
            })
            .collect()
    };
    let plot = Plot::new("speed profiles", "log10 t", "log2 speed")
        .with(Series::line("φ (x speed)", profile(0)))
        .with(Series::line("ψ (y speed)", profile(1)));

    write(&cfg.out, "schedule.csv", &ce.schedule().to_csv())?;
    write(&cfg.out, "profile.svg", &plot.to_svg())?;
    write(&cfg.out, "trajectory.csv", &traj.to_csv())?;
    write(&cfg.out, "secants.csv", &set.to_csv())?;
    write(&cfg.out, "secants.svg", &secant_plot(&set).to_svg())?;
    write(&cfg.out, "report.txt", &report)?;
    print!("{report}");
    Ok(0)
}
