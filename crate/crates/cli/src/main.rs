#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dcpbc::demos::Demo;
use dcpbc::ControllerKind;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "dcpbc", version, about = "Passivity-based converter control simulator")]
pub struct Cli {
    /// Scenario configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for trajectories, plots and reports.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub controller: Option<ControllerArg>,
    /// Exit with status 2 when a regulation or passivity check fails.
    #[arg(long, global = true)]
    pub check: bool,
    /// Seed of the synthetic load generator.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Integration step in microseconds.
    #[arg(long = "step-us", global = true, value_name = "N")]
    pub step_us: Option<f64>,
    /// Simulated horizon in seconds.
    #[arg(long = "duration-s", global = true, value_name = "X")]
    pub duration_s: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ControllerArg {
    Ph,
    Pi,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::Ph => ControllerKind::Ph,
            ControllerArg::Pi => ControllerKind::Pi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoArg {
    Normal,
    Ocp,
    Sag,
}

impl From<DemoArg> for Demo {
    fn from(d: DemoArg) -> Self {
        match d {
            DemoArg::Normal => Demo::Normal,
            DemoArg::Ocp => Demo::Ocp,
            DemoArg::Sag => Demo::Sag,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate the scenario given by --config.
    Run,
    /// Run the passivity-based and PI controllers on the same scenario.
    Compare,
    /// Run a grid of passivity-based gains in parallel.
    Sweep {
        /// Outer-loop damping values [W/V], comma separated.
        #[arg(long = "k-v", value_delimiter = ',')]
        k_v: Vec<f64>,
        /// Inner-loop damping values [1/s], comma separated.
        #[arg(long = "k-i", value_delimiter = ',')]
        k_i: Vec<f64>,
    },
    /// Re-audit a trajectory CSV written by this tool.
    Audit {
        #[arg(value_name = "TRAJECTORY")]
        trajectory: PathBuf,
    },
    /// Built-in case study.
    Demo {
        #[arg(value_enum)]
        which: DemoArg,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
