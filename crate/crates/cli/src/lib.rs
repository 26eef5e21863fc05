//! The `oplab` command line: computations, verification suites and
//! plot-ready tables for the weight x^α e^{−x−t/x} on (0, ∞).
//!
//! Exit codes: 0 success, 1 a property or cross-check failed, 2 usage error,
//! 3 precision exhausted, 4 any other numerical or I/O failure.

pub mod commands;
pub mod grid;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use oplab::asymptotics::{Mode, Quantity};
use oplab::Error;

pub use grid::Grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_OTHER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "oplab", version, about = "Orthogonal polynomials for the weight x^a e^(-x-t/x)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Moments mu_j for j = 0..=n-max, or j = n.
    Moments,
    /// Recurrence coefficients and auxiliary quantities.
    Recurrence,
    /// Zeros of P_n.
    Zeros,
    /// Identity and property suites.
    Verify,
    /// Large-n and long-time expansions, optionally with remainder slopes.
    Asymptotics,
    /// Recurrence quantities over a t grid.
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    #[value(name = "s-relations")]
    SRelations,
    Discrete,
    Toda,
    Painleve,
    Sigma,
    Zeros,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Options {
    /// Deformation parameter t ≥ 0.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Exponent α > −1.
    #[arg(long, global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Single index n.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Largest index.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Grid start:stop:lin|log[:count], 10 points by default.
    #[arg(long, global = true)]
    pub grid: Option<Grid>,
    #[arg(long, global = true, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Starting precision in bits.
    #[arg(long, global = true)]
    pub precision_bits: Option<u32>,
    /// Relative agreement required between precision levels.
    #[arg(long, global = true)]
    pub target_rel_err: Option<f64>,
    /// Output format; `verify` defaults to json, the rest to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// ε ≥ 0 in the zero-bound constant 4cos²(π/(n+1)) + ε.
    #[arg(long, global = true, default_value_t = commands::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Expansion label, e.g. alpha_n, beta_n, p, H, lnD, lnh, lnPn0, Y, X, quarter_sq, A.
    #[arg(long, global = true)]
    pub quantity: Option<String>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Fit the remainder order over the grid.
    #[arg(long, global = true)]
    pub slope: bool,
    /// Significant digits for multiprecision output.
    #[arg(long, global = true, default_value_t = output::DEFAULT_DIGITS)]
    pub digits: usize,
    /// Constant ĉ₃ of the large-n ln D_n and ln h_n series.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c3: Option<f64>,
    /// Constant ĉ₀ of the large-n ln D_n and ln h_n series.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c0: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

pub fn parse_quantity(s: &str) -> Result<(Quantity, bool), Error> {
    Ok((s.parse::<Quantity>()?, s.ends_with("_longtime")))
}

/// Failure of a run, already mapped to its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(e) => error_code(e),
            CliError::Io(_) => EXIT_OTHER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

/// Exit code of a library error.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::PropertyViolation { .. } | Error::CrossCheckMismatch { .. } => EXIT_PROPERTY,
        Error::PrecisionExhausted { .. } => EXIT_PRECISION,
        Error::InvalidArgument(_) | Error::Domain(_) | Error::SingularAtZero => EXIT_USAGE,
        _ => EXIT_OTHER,
    }
}

/// Artifact of a successful run and whether every check in it passed.
pub struct Artifact {
    pub body: String,
    pub passed: bool,
    /// Human-readable summary for standard error.
    pub note: Option<String>,
}

/// Parses `argv`, runs the command and writes the artifact to `--out` or
/// `stdout`. Diagnostics go to `stderr`. Returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli).and_then(|a| deliver(&cli, a, stdout, stderr)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "oplab: {e}");
            e.exit_code()
        }
    }
}

fn deliver(cli: &Cli, artifact: Artifact, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.opts.out {
        Some(path) => std::fs::write(path, artifact.body.as_bytes())?,
        None => stdout.write_all(artifact.body.as_bytes())?,
    }
    if let Some(note) = &artifact.note {
        writeln!(stderr, "{note}")?;
    }
    Ok(if artifact.passed { EXIT_OK } else { EXIT_PROPERTY })
}

/// [`run_with`] on the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    run_with(argv, &mut out, &mut err)
}
