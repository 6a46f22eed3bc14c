//! Run configuration.
//!
//! A run is described by a flat TOML file whose keys mirror the command line
//! flags; flags given on the command line override the file.
//!
//! ```toml
//! app = "bp"
//! n = 100
//! seeds = "1..10"
//! rules = "classic,optimal"
//! tol = 1e-9
//! out_dir = "results/bp"
//! format = "markdown"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use genpd_core::counterexample;
use genpd_core::{SolverParams, StepRule};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum App {
    Bp,
    Potts,
    Assign,
    Counterexample,
    Certify,
}

impl App {
    pub fn name(self) -> &'static str {
        match self {
            App::Bp => "bp",
            App::Potts => "potts",
            App::Assign => "assign",
            App::Counterexample => "counterexample",
            App::Certify => "certify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

/// Every setting as it appears in a config file, all optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub app: Option<App>,
    pub n: Option<usize>,
    pub size: Option<usize>,
    pub seeds: Option<String>,
    pub rules: Option<String>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu: Option<f64>,
    pub noise: Option<f64>,
    pub means: Option<Vec<f64>>,
    pub s_values: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
    pub costs: Option<PathBuf>,
    pub sweep: Option<String>,
    pub trace: Option<f64>,
    pub steps: Option<usize>,
    pub problem: Option<App>,
    pub alpha_sweep: Option<bool>,
    pub history: Option<bool>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        RawConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::invalid(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let base = self;
        overlay!(base, top; app, n, size, seeds, rules, alpha, r, s, tol, max_iter, mu, noise, means,
            s_values, input, costs, sweep, trace, steps, problem, alpha_sweep, history, jobs, out_dir, format)
    }
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub app: App,
    /// Problem size: vector length for basis pursuit, matrix order for assignment.
    pub n: usize,
    /// Side of the synthetic Potts image.
    pub size: usize,
    pub seeds: Vec<u64>,
    pub rules: Vec<StepRule>,
    /// Explicit extrapolation parameter; `None` uses each rule's default.
    pub alpha: Option<f64>,
    /// Manual step weights, only with the manual rule.
    pub manual: Option<(f64, f64)>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu: f64,
    pub noise: f64,
    pub means: Vec<f64>,
    pub s_values: Vec<f64>,
    pub input: Option<PathBuf>,
    pub costs: Option<PathBuf>,
    pub sweep: (f64, f64, f64),
    /// `r` whose counterexample trajectory is written out.
    pub trace: Option<f64>,
    pub steps: usize,
    /// Problem family certified by the `certify` app.
    pub problem: App,
    pub alpha_sweep: bool,
    pub history: bool,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub format: Format,
}

pub const DEFAULT_MEANS: [f64; 4] = [0.1, 0.4, 0.7, 1.0];
pub const DEFAULT_S_VALUES: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 7.0];
/// Largest assignment order accepted by `certify` (dense matrices of side `n^2 + 2n`).
pub const CERTIFY_MAX_ASSIGN: usize = 40;
/// Largest basis pursuit length accepted by `certify`.
pub const CERTIFY_MAX_BP: usize = 1000;

/// `"3"`, `"1..10"` (inclusive), `"1..=10"` or `"1,4,9"`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || CliError::invalid(format!("cannot parse seeds {text:?}"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: u64 = a.trim().parse().map_err(|_| bad())?;
        let hi: u64 = b.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let seeds = text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<Vec<u64>>>()?;
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(CliError::invalid("duplicate seeds"));
    }
    Ok(seeds)
}

/// Comma separated rule names, without repeats.
pub fn parse_rules(text: &str) -> Result<Vec<StepRule>> {
    let mut rules = Vec::new();
    for name in text.split(',') {
        let rule: StepRule = name.parse().map_err(|_| CliError::invalid(format!("unknown rule {:?}", name.trim())))?;
        if rules.contains(&rule) {
            return Err(CliError::invalid(format!("rule {rule} listed twice")));
        }
        rules.push(rule);
    }
    Ok(rules)
}

/// `start:stop:step`.
pub fn parse_sweep(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::invalid(format!("sweep must be start:stop:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    counterexample::r_grid(v[0], v[1], v[2])?;
    Ok((v[0], v[1], v[2]))
}

impl RunConfig {
    /// The alpha a rule runs with.
    pub fn alpha_for(&self, rule: StepRule) -> f64 {
        match rule {
            StepRule::Optimal => 0.5,
            StepRule::Improved => self.alpha.unwrap_or(0.5),
            _ => self.alpha.unwrap_or(1.0),
        }
    }

    /// Applies the tolerance and iteration overrides.
    pub fn tune(&self, mut params: SolverParams) -> SolverParams {
        if let Some(tol) = self.tol {
            params.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            params.max_iter = max_iter;
        }
        params
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let app = raw.app.ok_or_else(|| CliError::invalid("no app given"))?;
        let default_rules = match app {
            App::Assign => "heuristic,classic,optimal",
            App::Certify => "optimal",
            _ => "classic,optimal",
        };
        let rules = parse_rules(raw.rules.as_deref().unwrap_or(default_rules))?;
        let seeds = parse_seeds(raw.seeds.as_deref().unwrap_or("1"))?;
        let manual = match (raw.r, raw.s) {
            (None, None) => None,
            (Some(r), Some(s)) => Some((r, s)),
            _ => return Err(CliError::invalid("manual steps need both r and s")),
        };
        if manual.is_some() && !rules.contains(&StepRule::Manual) {
            return Err(CliError::invalid("r and s are only honored with the manual rule"));
        }
        if manual.is_none() && rules.contains(&StepRule::Manual) {
            return Err(CliError::invalid("the manual rule needs r and s"));
        }

        let n = raw.n.unwrap_or(match app {
            App::Assign => 50,
            App::Certify => 5,
            _ => 100,
        });
        let problem = raw.problem.unwrap_or(App::Assign);
        let config = RunConfig {
            app,
            n,
            size: raw.size.unwrap_or(32),
            seeds,
            rules,
            alpha: raw.alpha,
            manual,
            tol: raw.tol,
            max_iter: raw.max_iter,
            mu: raw.mu.unwrap_or(0.5),
            noise: raw.noise.unwrap_or(0.05),
            means: raw.means.unwrap_or_else(|| DEFAULT_MEANS.to_vec()),
            s_values: raw.s_values.unwrap_or_else(|| DEFAULT_S_VALUES.to_vec()),
            input: raw.input,
            costs: raw.costs,
            sweep: parse_sweep(raw.sweep.as_deref().unwrap_or("0.55:1.2:0.05"))?,
            trace: raw.trace,
            steps: raw.steps.unwrap_or(200),
            problem,
            alpha_sweep: raw.alpha_sweep.unwrap_or(false),
            history: raw.history.unwrap_or(false),
            jobs: raw.jobs.unwrap_or(1),
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("genpd-out")),
            format: raw.format.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        for &rule in &self.rules {
            let (r, s) = self.manual.unwrap_or((1.0, 1.0));
            let params = self.tune(SolverParams::new(r, s, self.alpha_for(rule), rule));
            params.validate_basic().map_err(|e| CliError::invalid(format!("rule {rule}: {e}")))?;
            if rule == StepRule::Optimal && self.alpha.is_some_and(|a| a != 0.5) {
                return Err(CliError::invalid("the optimal rule runs with alpha = 0.5; drop alpha or the rule"));
            }
        }
        if self.jobs == 0 {
            return Err(CliError::invalid("jobs must be at least 1"));
        }
        if self.steps == 0 {
            return Err(CliError::invalid("steps must be at least 1"));
        }
        match self.app {
            App::Bp => {
                if self.n < 20 {
                    return Err(CliError::invalid("basis pursuit needs n >= 20"));
                }
            }
            App::Assign => {
                if self.costs.is_none() && self.n < 2 {
                    return Err(CliError::invalid("assignment needs n >= 2"));
                }
                if let Some(path) = &self.costs {
                    require_file(path)?;
                }
            }
            App::Potts => self.validate_potts()?,
            App::Counterexample => {
                if self.trace.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
                    return Err(CliError::invalid("trace needs a positive r"));
                }
            }
            App::Certify => match self.problem {
                App::Assign if (2..=CERTIFY_MAX_ASSIGN).contains(&self.n) => {}
                App::Bp if (20..=CERTIFY_MAX_BP).contains(&self.n) => {}
                App::Assign | App::Bp => {
                    return Err(CliError::invalid(format!("n = {} is outside the certifiable range", self.n)))
                }
                other => return Err(CliError::invalid(format!("cannot certify problem {:?}", other.name()))),
            },
        }
        Ok(())
    }

    fn validate_potts(&self) -> Result<()> {
        if let Some(rule) = self.rules.iter().find(|r| !matches!(r, StepRule::Classic | StepRule::Optimal | StepRule::Manual)) {
            return Err(CliError::invalid(format!("potts runs classic, optimal or manual steps, not {rule}")));
        }
        if self.alpha.is_some() {
            return Err(CliError::invalid("potts has no alpha setting"));
        }
        if self.means.len() < 2 || self.means.iter().any(|m| !m.is_finite()) {
            return Err(CliError::invalid("potts needs at least two finite label means"));
        }
        if self.input.is_none() && self.means.len() != 4 {
            return Err(CliError::invalid("the synthetic image has four quadrants; give four means"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) || !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(CliError::invalid("mu must be positive and noise nonnegative"));
        }
        if self.s_values.is_empty() || self.s_values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(CliError::invalid("s_values must be positive"));
        }
        if self.input.is_none() && self.size < 2 {
            return Err(CliError::invalid("image size must be at least 2"));
        }
        if let Some(path) = &self.input {
            require_file(path)?;
        }
        Ok(())
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{} is not a readable file", path.display())))
    }
}
