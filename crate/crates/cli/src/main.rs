//! `pacing`: optimal pacing scenarios from the command line.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pacing::Error;

const OUTPUT_HELP: &str = "\
Outputs (written to --out):
  solve        trajectory.csv  t [s], x [m], v [m/s], f [m/s^2], e [J/kg], u [-]
               summary.json    t_f, objective, kkt_residual, n_nodes, e_end, e_min, plateau
               solve.svg       v, f, sigma(e), u, e against distance
  approx       turnpike.json   every quantity of the closed-form chain
               profile.csv     t [s], v [m/s], phase (1 start, 2 turnpike, 3 sprint)
               approx.svg      closed-form and optimal velocity against distance
  fit          fitted.json     configuration with the fitted fields (same schema as --config)
               fit_report.json fitted parameters, residual, refinement history
               fit.svg         data and fitted profile against time
  slope-sweep  sweep.csv       scenario, t_f [s], mean_v [m/s], plateau_v [m/s]
               velocity.csv    scenario, x [m], v [m/s], beta [-]
               sweep.json      per-scenario summaries and velocity extrema
               sweep.svg       velocity against distance for every scenario
  fixtures     <name>.json     every bundled configuration

CSV files with t and v columns load back through `pacing fit`.

Exit status: 0 ok, 1 domain or input error, 2 solver failure. Errors are
printed to stderr as a JSON document. Log level: PACING_LOG (error, warn,
info, debug, trace).";

#[derive(Parser, Debug)]
#[command(name = "pacing", version, about = "Optimal pacing for middle-distance races", after_help = OUTPUT_HELP)]
pub struct Cli {
    /// Model configuration (JSON with runner, sigma and slope sections).
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    /// Bundled configuration used when --config is absent.
    #[arg(long, global = true, default_value = "regional")]
    pub fixture: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Collocation nodes.
    #[arg(long, global = true, default_value_t = 400)]
    pub nodes: usize,
    /// Solver tolerance on the KKT residual.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Outer iterations of the augmented Lagrangian solver.
    #[arg(long, global = true, default_value_t = 60)]
    pub max_outer: usize,
    /// Override a configuration field, e.g. --set tau=0.95 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    HermiteSimpson,
    Trapezoidal,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the optimal control problem.
    Solve {
        #[arg(long, value_enum, default_value = "hermite-simpson")]
        scheme: SchemeArg,
    },
    /// Closed-form three-phase approximation.
    Approx {
        /// Skip the optimal control solve used for the overlay plot.
        #[arg(long)]
        no_overlay: bool,
        /// Number of profile intervals written to profile.csv.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Identify runner parameters from a velocity CSV.
    Fit {
        /// CSV with (t, v) or cumulative (distance, time) columns.
        input: PathBuf,
        /// Race distance [m] for a (t, v) series; defaults to its integral.
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        sigma_bar: Option<f64>,
        #[arg(long)]
        sigma_f: Option<f64>,
        #[arg(long)]
        sigma_r: Option<f64>,
        /// Polish the estimate against optimal control solves.
        #[arg(long)]
        refine: bool,
        /// Forward solves allowed during refinement.
        #[arg(long, default_value_t = 40)]
        budget: usize,
    },
    /// Solve the bundled gradient scenarios.
    SlopeSweep,
    /// Convert a VO2max [ml/min/kg] to aerobic power [W/kg].
    Vo2 { vo2max: f64 },
    /// Write every bundled configuration as JSON.
    Fixtures,
}

fn error_document(kind: &str, message: &str, code: u8) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": code } }).to_string()
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PACING_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_document("usage", e.to_string().trim(), 1));
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli) {
        Ok(stdout) => {
            use std::io::Write;
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout(), "{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_document(e.kind(), &e.to_string(), code));
            ExitCode::from(code)
        }
    }
}
