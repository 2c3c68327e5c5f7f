mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mosum::BcpMethod;

use crate::output::Format;

/// Crossing probabilities and run lengths of moving sums of normal variables.
#[derive(Parser)]
#[command(name = "mosum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crossing probability over a horizon by several methods.
    Bcp(BcpArgs),
    /// Accuracy tables: crossing probabilities (table1, table2) and run lengths (table3).
    Table(TableArgs),
    /// Curves over a threshold grid or a time grid, in long format.
    Curves(CurvesArgs),
    /// Threshold that gives a target crossing probability or run length.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct Run {
    /// Seed of the Monte Carlo streams.
    #[arg(long, env = "MOSUM_SEED", default_value_t = 1)]
    seed: u64,
    /// Monte Carlo replications (per group for Glaz run lengths).
    #[arg(long, default_value_t = 100_000)]
    replications: u64,
    /// Worker threads for simulation; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Process {
    /// Window length L.
    #[arg(long = "L")]
    window: usize,
    /// Mean of the observations.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Standard deviation of the observations.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Args, Debug)]
struct BcpArgs {
    #[command(flatten)]
    process: Process,
    /// Horizon M, in moving sums after the first.
    #[arg(long = "M")]
    horizon: usize,
    /// Standardized threshold.
    #[arg(long = "h", allow_hyphen_values = true, conflicts_with = "raw")]
    h: Option<f64>,
    /// Threshold on the raw sums; converted with --mu and --sigma.
    #[arg(long = "H", allow_hyphen_values = true)]
    raw: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "durbin,pch,diffusion,cda"
    )]
    methods: Vec<BcpMethod>,
    #[command(flatten)]
    run: Run,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Table1,
    Table2,
    Table3,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(value_enum)]
    which: Which,
    #[command(flatten)]
    run: Run,
}

#[derive(Args, Debug)]
struct CurvesArgs {
    #[command(flatten)]
    process: Process,
    /// Horizon M, for a threshold grid.
    #[arg(long = "M")]
    horizon: Option<usize>,
    /// Threshold grid, `lo:hi:step` or a comma list.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "t_grid")]
    h_grid: Option<String>,
    /// Time grid in window lengths, `lo:hi:step` or a comma list; needs --h.
    #[arg(long, allow_hyphen_values = true)]
    t_grid: Option<String>,
    /// Threshold, for a time grid.
    #[arg(long = "h", allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "durbin,pch,diffusion,cda,mc"
    )]
    methods: Vec<BcpMethod>,
    #[command(flatten)]
    run: Run,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CalibrationMethod {
    Cda,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    process: Process,
    /// Horizon M, for a crossing-probability target.
    #[arg(long = "M")]
    horizon: Option<usize>,
    /// Target crossing probability over M.
    #[arg(long, conflicts_with = "arl", required_unless_present = "arl")]
    bcp: Option<f64>,
    /// Target average run length.
    #[arg(long)]
    arl: Option<f64>,
    #[arg(long, value_enum, default_value_t = CalibrationMethod::Cda)]
    method: CalibrationMethod,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Library(mosum::Error),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Library(e) if e.is_numeric_failure() => 3,
            Failure::Input(_) | Failure::Library(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "invalid input: {m}"),
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<mosum::Error> for Failure {
    fn from(e: mosum::Error) -> Self {
        Failure::Library(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bcp(a) => commands::bcp(a),
        Command::Table(a) => commands::table(a),
        Command::Curves(a) => commands::curves(a),
        Command::Calibrate(a) => commands::calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
