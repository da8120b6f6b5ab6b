use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

mod commands;
mod config;
mod fnspec;
mod svg;

use config::{ExperimentConfig, Settings, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "cpflow",
    version,
    about = "Subgradient flows of convex functions: trajectories, asymptotic directions, determination checks",
    after_help = "Exit codes: 0 success, 1 numerical failure, 2 usage or config error, \
                  3 determination mismatch, 4 determination inconclusive."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key = value experiment file; flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [default: cpflow-out]
    #[arg(long, value_name = "DIR", env = "CPFLOW_OUT")]
    out: Option<PathBuf>,
    /// RNG seed for probe sets
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integrate a subgradient flow and estimate its asymptotic direction
    #[command(
        name = "run-flow",
        long_about = "Integrates the subgradient flow x' ∈ -∂f(x) with proximal steps \
x_{k+1} = prox_{hf}(x_k).\n\n\
Exercises: the speed ‖∂°f(x(t))‖ is nonincreasing in t and tends to the infimum of the \
slope of f, and x(t)/t → -p_f where p_f is the minimal-norm element of the closure of \
the range of ∂f (the Crandall–Pazy direction).\n\n\
Writes trajectory.csv, cp.csv and speed.svg. For counterexample2d the flow runs on \
log-spaced checkpoints and also writes secants.csv and secants.svg."
    )]
    RunFlow {
        #[command(flatten)]
        common: Common,
        /// Function spec: ID or ID;key=value;... (see README)
        #[arg(long = "fn", value_name = "SPEC")]
        function: Option<String>,
        /// Vector parameter of the function (center, slope), comma separated
        #[arg(long, value_name = "A0,A1,..", allow_hyphen_values = true)]
        a: Option<String>,
        /// Start point, comma separated [default: origin]
        #[arg(long, value_name = "X0,X1,..", allow_hyphen_values = true)]
        x0: Option<String>,
        /// Horizon [default: 50, or the schedule horizon for counterexample2d]
        #[arg(long = "T", value_name = "T")]
        horizon: Option<String>,
        /// Step size [default: 0.1]
        #[arg(long)]
        h: Option<String>,
        /// Depth of counterexample2d
        #[arg(long)]
        depth: Option<String>,
    },
    /// Decide whether two convex functions agree up to a constant
    #[command(
        name = "run-determine",
        long_about = "Checks the determination statement: two convex functions whose slopes \
‖∂°f‖ and ‖∂°g‖ agree everywhere and whose Crandall–Pazy directions agree differ by an \
additive constant. Equal slopes alone do not suffice (f(t) = t and g(t) = -t).\n\n\
Probes are Halton points in [-probe_half, probe_half]^d. Writes report.txt and \
evidence.csv. Exit code 0 for equal_up_to_constant, 3 for slope_mismatch or cp_mismatch, \
4 for inconclusive."
    )]
    RunDetermine {
        #[command(flatten)]
        common: Common,
        /// First function spec
        #[arg(long = "fn", value_name = "SPEC")]
        function: Option<String>,
        /// Second function spec
        #[arg(long = "gn", value_name = "SPEC")]
        other: Option<String>,
        /// Vector parameter of the first function
        #[arg(long, value_name = "A0,A1,..", allow_hyphen_values = true)]
        a: Option<String>,
        /// Horizon of the direction estimates [default: 200]
        #[arg(long = "T", value_name = "T")]
        horizon: Option<String>,
        /// Step size [default: 0.1]
        #[arg(long)]
        h: Option<String>,
        /// Number of probes [default: 16]
        #[arg(long)]
        probes: Option<String>,
    },
    /// Build the planar function whose flow oscillates between the axes
    #[command(
        name = "run-counterexample",
        long_about = "Builds f(x, y) = Φ(x) + Ψ(y) from two plateau speed profiles that drop \
in turn, so that the flow from the origin runs alternately almost parallel to each axis.\n\n\
Exercises: the secant directions (x(0) - x(t))/‖x(0) - x(t)‖ of a diverging subgradient \
curve need not converge; their cluster set has more than one point.\n\n\
Writes schedule.csv, profile.svg, trajectory.csv, secants.csv, secants.svg and report.txt. \
Alpha specs: squared (α_n = 2^(-n²)), geometric:R (α_n = R^(-n)), list:a0,a1,..."
    )]
    RunCounterexample {
        #[command(flatten)]
        common: Common,
        /// Number of scheduled breakpoints [default: 6]
        #[arg(long)]
        depth: Option<String>,
        /// Plateau levels [default: squared]
        #[arg(long)]
        alpha: Option<String>,
    },
}

fn settings(common: &Common, flags: &[(&str, Option<&String>)]) -> Result<Settings, UsageError> {
    let mut s = match &common.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    s.set("out", common.out.as_ref().map(|p| p.display().to_string()));
    s.set("seed", common.seed);
    for (k, v) in flags {
        s.set(k, *v);
    }
    Ok(s)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::RunFlow {
            common,
            function,
            a,
            x0,
            horizon,
            h,
            depth,
        } => {
            let s = settings(
                &common,
                &[
                    ("fn", function.as_ref()),
                    ("a", a.as_ref()),
                    ("x0", x0.as_ref()),
                    ("T", horizon.as_ref()),
                    ("h", h.as_ref()),
                    ("depth", depth.as_ref()),
                ],
            )?;
            if s.raw("fn").is_none() {
                missing_fn("run-flow");
            }
            commands::run_flow(&ExperimentConfig::from_settings(&s, "flow")?, s.raw("depth").is_some())
        }
        Cmd::RunDetermine {
            common,
            function,
            other,
            a,
            horizon,
            h,
            probes,
        } => {
            let s = settings(
                &common,
                &[
                    ("fn", function.as_ref()),
                    ("gn", other.as_ref()),
                    ("a", a.as_ref()),
                    ("T", horizon.as_ref()),
                    ("h", h.as_ref()),
                    ("probes", probes.as_ref()),
                ],
            )?;
            if s.raw("fn").is_none() || s.raw("gn").is_none() {
                missing_fn("run-determine");
            }
            commands::run_determine(&ExperimentConfig::from_settings(&s, "determine")?)
        }
        Cmd::RunCounterexample { common, depth, alpha } => {
            let s = settings(&common, &[("depth", depth.as_ref()), ("alpha", alpha.as_ref())])?;
            commands::run_counterexample(&ExperimentConfig::from_settings(&s, "counterexample")?)
        }
    }
}

fn missing_fn(sub: &str) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = cmd.find_subcommand_mut(sub).expect("known subcommand");
    let msg = if sub.get_name() == "run-determine" {
        "both --fn and --gn are required (as flags or in --config)"
    } else {
        "--fn is required (as a flag or in --config)"
    };
    sub.error(clap::error::ErrorKind::MissingRequiredArgument, msg).exit()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<cpflow_core::Error>() {
        Some(
            cpflow_core::Error::InvalidParameter(_)
            | cpflow_core::Error::DimensionMismatch { .. }
            | cpflow_core::Error::NonFinite
            | cpflow_core::Error::ScheduleOverflow { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
