//! Command line arguments and their mapping onto [`RawConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{App, Format, RawConfig, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "genpd", version, about = "Generalized primal-dual saddle point solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Basis pursuit: min |x|_1 subject to Ax = b.
    Bp(BpArgs),
    /// Potts image segmentation.
    Potts(PottsArgs),
    /// Relaxed linear assignment.
    Assign(AssignArgs),
    /// Divergence boundary of the scalar counterexample.
    Counterexample(CounterexampleArgs),
    /// Certificate checks on a small instance.
    Certify(CertifyArgs),
    /// Runs the app named in a config file.
    Run {
        #[arg(value_name = "CONFIG")]
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds: "3", "1..10" (inclusive) or "1,4,9".
    #[arg(long)]
    pub seeds: Option<String>,
    /// Comma separated step rules: classic, improved, optimal, heuristic, manual.
    #[arg(long)]
    pub rules: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Primal weight (manual rule only).
    #[arg(long)]
    pub r: Option<f64>,
    /// Dual weight (manual rule only).
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Worker threads for independent runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct BpArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Also sweep alpha over 0, 0.1, ..., 1 under the improved rule.
    #[arg(long)]
    pub alpha_sweep: bool,
    /// Write the per-iteration history of every run.
    #[arg(long)]
    pub history: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PottsArgs {
    /// Side of the synthetic four-quadrant image.
    #[arg(long)]
    pub size: Option<usize>,
    /// Binary PGM to segment instead of the synthetic image.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Label intensities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub means: Option<Vec<f64>>,
    /// Regularization weight.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Noise level of the synthetic image.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Dual weights to compare the rules at, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub s_values: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Square cost matrix file (rows on lines, comma or space separated).
    #[arg(long)]
    pub costs: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Grid of r values as start:stop:step.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Also write the trajectory for this r.
    #[arg(long)]
    pub trace: Option<f64>,
    /// Steps simulated per r.
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Problem family: assign or bp.
    #[arg(long, value_enum)]
    pub problem: Option<App>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Iterations recorded.
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

impl Common {
    fn raw(&self) -> RawConfig {
        RawConfig {
            seeds: self.seeds.clone(),
            rules: self.rules.clone(),
            alpha: self.alpha,
            r: self.r,
            s: self.s,
            tol: self.tol,
            max_iter: self.max_iter,
            jobs: self.jobs,
            out_dir: self.out.clone(),
            format: self.format,
            ..Default::default()
        }
    }
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

impl Command {
    /// Reads the config file if any, applies the flags and validates.
    pub fn into_config(self) -> Result<RunConfig> {
        let (app, common, flags) = match self {
            Command::Bp(a) => {
                let flags = RawConfig { n: a.n, alpha_sweep: flag(a.alpha_sweep), history: flag(a.history), ..a.common.raw() };
                (Some(App::Bp), a.common, flags)
            }
            Command::Potts(a) => {
                let flags = RawConfig {
                    size: a.size,
                    input: a.input,
                    means: a.means,
                    mu: a.mu,
                    noise: a.noise,
                    s_values: a.s_values,
                    ..a.common.raw()
                };
                (Some(App::Potts), a.common, flags)
            }
            Command::Assign(a) => {
                let flags = RawConfig { n: a.n, costs: a.costs, ..a.common.raw() };
                (Some(App::Assign), a.common, flags)
            }
            Command::Counterexample(a) => {
                let flags = RawConfig { sweep: a.sweep, trace: a.trace, steps: a.steps, ..a.common.raw() };
                (Some(App::Counterexample), a.common, flags)
            }
            Command::Certify(a) => {
                let flags = RawConfig { problem: a.problem, n: a.n, steps: a.steps, ..a.common.raw() };
                (Some(App::Certify), a.common, flags)
            }
            Command::Run { file, common } => {
                if common.config.is_some() {
                    return Err(CliError::invalid("give the config file once"));
                }
                let flags = common.raw();
                let common = Common { config: Some(file), ..common };
                (None, common, flags)
            }
        };
        let file = match &common.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        if let (Some(want), Some(have)) = (app, file.app) {
            if want != have {
                return Err(CliError::invalid(format!("config is for {:?}, not {:?}", have.name(), want.name())));
            }
        }
        let merged = file.overlay(RawConfig { app, ..flags });
        RunConfig::from_raw(merged)
    }
}
