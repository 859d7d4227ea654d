//! Command-line front end: `jdot toy | adapt | sweep | eval`.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or other failure |
//! | 2 | usage error (bad flag or flag value) |
//! | 3 | data error (unreadable, malformed or inconsistent datasets, schema problems) |
//! | 4 | solver failure (ill-conditioned system, simplex breakdown) |

mod adapt;
mod args;
mod eval;
mod job;
mod report;
mod sweep;
mod toy;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

pub use args::{AdaptArgs, Cli, Command, EvalArgs, KernelKind, SweepArgs, ToyArgs, ToyKind};
pub use job::{evaluate, Metrics, WithinRange};
pub use report::{BaselineSummary, DatasetInfo, RunReport, RunSummary, SeriesPoint, Timing};

use crate::error::{Error, ErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input | ErrorKind::Data => EXIT_DATA,
                ErrorKind::Solver => EXIT_SOLVER,
                ErrorKind::Io => EXIT_OTHER,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `args` (including the program name), run the command and return the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("jdot: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Toy(a) => toy::run(&a),
        Command::Adapt(a) => adapt::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Eval(a) => eval::run(&a),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| {
        CliError::Core(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn to_json_pretty<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}
