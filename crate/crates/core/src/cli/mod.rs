//! The `mprof` command line.
//!
//! Exit codes: 0 success, 2 configuration, 3 input, 4 numerical degeneracy,
//! 5 internal invariant breach.

mod commands;
mod config;
mod telemetry;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_analyze, cmd_pipeline, cmd_profile, cmd_simulate, cmd_smooth, sha256_hex,
    BOXPLOT_OUTLIERS_FILE, COEFFICIENTS_FILE, COMPARISON_FILE, CONSERVATION_TOLERANCE,
    ENDPOINT_FILE, LABELS_FILE, MANIFEST_FILE, MSPLOT_FILE, REPORT_CSV_FILE, REPORT_JSON_FILE,
    SMOOTHING_SUMMARY_FILE, TELEMETRY_FILE,
};
pub use config::{
    AnalysisConfig, BasisConfig, HistogramConfig, PipelineConfig, ProfileConfig, SimulationConfig,
    SimulationKind, CONFIG_SCHEMA,
};
pub use telemetry::{read_labels, read_telemetry, write_labels, write_telemetry, TELEMETRY_HEADER};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "mprof", version, about = "Functional mission profiles from device usage telemetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline configuration (JSON); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the simulation and projection seeds.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Evaluation grid size.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Central-region fraction.
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    /// Fixed smoothing parameter.
    #[arg(long, value_name = "X", conflicts_with = "lambda_grid")]
    pub lambda: Option<f64>,
    /// Candidate smoothing parameters for GCV selection.
    #[arg(long, value_name = "A,B,C", value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Number of projection directions.
    #[arg(long, value_name = "N")]
    pub directions: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic telemetry and group labels.
    Simulate {
        #[arg(value_enum)]
        kind: SimulationKind,
        #[command(flatten)]
        common: Common,
    },
    /// Smooth telemetry CSV into basis coefficients.
    Smooth {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Outlyingness report, functional boxplot bands and MS-plot data.
    Analyze {
        #[arg(long, value_name = "JSON")]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Residence histograms of the central set and the selection comparison.
    Profile {
        #[arg(long, value_name = "JSON")]
        input: PathBuf,
        #[arg(long, value_name = "JSON")]
        report: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every stage into one directory and write a manifest.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Print the configuration JSON Schema.
    Schema,
}

impl Common {
    /// Loads the configuration, applies flag overrides and validates it.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        c.resolve_seed();
        if let Some(g) = self.grid {
            c.analysis.grid_size = g;
        }
        if let Some(g) = self.gamma {
            c.analysis.gamma = g;
        }
        if let Some(l) = self.lambda {
            c.smoothing.lambda = l;
            c.smoothing.lambda_grid = None;
        }
        if let Some(grid) = &self.lambda_grid {
            c.smoothing.lambda_grid = Some(grid.clone());
        }
        if self.directions.is_some() {
            c.analysis.directions = self.directions;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { kind, common } => {
            let mut config = common.resolve()?;
            config.simulation.kind = kind;
            config.validate()?;
            cmd_simulate(kind, &config, &common.out)?;
        }
        Command::Smooth { input, common } => {
            cmd_smooth(&input, &common.resolve()?, &common.out)?;
        }
        Command::Analyze { input, common } => {
            cmd_analyze(&input, &common.resolve()?, &common.out)?;
        }
        Command::Profile { input, report, common } => {
            cmd_profile(&input, &report, &common.resolve()?, &common.out)?;
        }
        Command::Pipeline { common } => {
            cmd_pipeline(&common.resolve()?, &common.out)?;
        }
        Command::Schema => print!("{CONFIG_SCHEMA}"),
    }
    Ok(())
}

/// Parses `std::env::args`, runs the command and returns the exit code.
/// Log verbosity follows `MP_LOG` (`debug`, `info`, `warn`; default `warn`).
pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MP_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
