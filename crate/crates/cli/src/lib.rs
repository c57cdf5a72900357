//! Command-line front end: state files in, estimates and plot-ready data out.
//!
//! Every command is deterministic given its resolved configuration; outputs
//! carry a metadata block with the tool version, output schema and a SHA-256
//! hash of that configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod routes;

pub use commands::{execute, run_compare, run_figure2, run_sample, CompareReport, Figure2, RunOutput};
pub use config::{Args, CommandName, Format, Route, RunConfig};
pub use error::{CliError, CliResult};

/// Parses nothing; runs an already-resolved configuration and writes its
/// artifacts. Returns the process exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    let out = match execute(cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for artifact in &out.artifacts {
        if let Err(e) = artifact.write() {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    match out.failure {
        Some(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        None => 0,
    }
}
