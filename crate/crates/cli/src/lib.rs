//! Command line front end for `genpd-core`: run configuration, benchmark
//! harness, CSV / markdown tables and PGM images.
//!
//! Every run goes through [`run::run`], which keeps all artifacts in memory
//! until the last solve has finished, so a rejected configuration never leaves
//! files behind.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod pgm;
pub mod run;
pub mod table;

pub use config::{App, Format, RawConfig, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, RunOutput};
pub use table::{emit_table, parse_csv, BenchRow};

/// Exit status of a finished run: 0 success, 1 divergence, 2 invalid input.
pub fn execute(config: &RunConfig) -> (u8, String) {
    match run(config) {
        Ok(out) => match out.write(&config.out_dir) {
            Ok(paths) => {
                let mut text = out.summary.clone();
                for d in &out.diverged {
                    text.push_str(&format!("diverged: {d}\n"));
                }
                for p in paths {
                    text.push_str(&format!("wrote {}\n", p.display()));
                }
                (out.exit_code(), text)
            }
            Err(e) => (e.exit_code(), format!("error: {e}\n")),
        },
        Err(e) => (e.exit_code(), format!("error: {e}\n")),
    }
}
