//! Command-line front end: the system file format, report structures and
//! the analysis commands.

pub mod commands;
pub mod file;
pub mod report;

use clap::{Parser, Subcommand};
use commands::{CliError, Session};
use file::Config;
use std::path::{Path, PathBuf};

pub const CONFIG_ENV: &str = "CTRLGEOM_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "ctrlgeom", version, about = "Derived flags, Goursat bundles and symmetry quotients of control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for the sample points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of sample points for zero tests.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Working precision in decimal digits.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    /// Number of sample points for rank decisions.
    #[arg(long, global = true)]
    pub rank_samples: Option<usize>,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Print the JSON report instead of the text rendering.
    #[arg(long, global = true)]
    pub json_stdout: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derived flag, Goursat and linearizability analysis.
    Analyze {
        file: PathBuf,
        /// Independence condition to check, an expression or a [tau] name.
        #[arg(long)]
        tau: Option<String>,
    },
    /// Symmetry checks, bracket table, transversality and quotient verdicts.
    Symmetry { file: PathBuf, name: String },
    /// Constructs a quotient and analyzes it.
    Quotient { file: PathBuf, name: String, quotient: String },
    /// Quotient verdicts for several symmetry blocks.
    Batch {
        file: PathBuf,
        names: Vec<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// S-G-S test of the Pfaffian system, or of the quotient by a symmetry block.
    Sgs {
        file: PathBuf,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        symmetry: Option<String>,
    },
}

impl Command {
    fn file(&self) -> &Path {
        match self {
            Command::Analyze { file, .. }
            | Command::Symmetry { file, .. }
            | Command::Quotient { file, .. }
            | Command::Batch { file, .. }
            | Command::Sgs { file, .. } => file,
        }
    }
}

/// What a run produced: the text to print and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub json: Option<String>,
    pub exit: i32,
}

fn default_config() -> Result<Config, CliError> {
    let Some(path) = std::env::var_os(CONFIG_ENV) else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("{}: {}", Path::new(&path).display(), e)))?;
    Config::parse(&text).map_err(|err| CliError::Parse { path: Path::new(&path).display().to_string(), err })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli.command.file();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {}", path.display(), e)))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let flags = Config { seed: cli.seed, samples: cli.samples, precision: cli.precision, rank_samples: cli.rank_samples };
    let threads = match &cli.command {
        Command::Batch { threads, .. } => *threads,
        _ => 1,
    };
    let session = Session::new(&name, &text, &flags, &default_config()?, threads)?;
    let report = match &cli.command {
        Command::Analyze { tau, .. } => commands::analyze(&session, tau.as_deref()),
        Command::Symmetry { name, .. } => commands::symmetry(&session, name),
        Command::Quotient { name, quotient, .. } => commands::quotient_cmd(&session, name, quotient),
        Command::Batch { names, .. } => commands::batch(&session, names),
        Command::Sgs { tau, symmetry, .. } => commands::sgs(&session, tau.as_deref(), symmetry.as_deref()),
    }?;
    let json = report.to_json();
    let stdout = if cli.json_stdout { json.clone() } else { report.to_string() };
    Ok(Outcome { stdout, json: Some(json), exit: commands::exit_code(&report) })
}
