//! Executes a [`RunConfig`]: solves, tables, and files on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use genpd_core::apps::assign::{self, AssignmentInstance};
use genpd_core::apps::bp::{self, BpInstance};
use genpd_core::apps::potts::{self, Grid, PottsInstance, PottsParams};
use genpd_core::certify::{self, CertificateReport, RateReport};
use genpd_core::counterexample;
use genpd_core::linops::materialize;
use genpd_core::pdsolver::solve;
use genpd_core::{DenseMatrix, Error as CoreError, Iterate, SaddleProblem, SolverParams, StepRule};
use rayon::prelude::*;

use crate::artifacts;
use crate::config::{App, Format, RunConfig};
use crate::error::{CliError, Result};
use crate::pgm::GrayImage;
use crate::table::{emit_summary, emit_table, BenchRow};

/// Solve accuracy of the reference point used by `certify`.
pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITER: usize = 2_000_000;
/// Pilot and checkpoints of the `O(1/N)` residual check.
pub const RATE_PILOT: usize = 10;
pub const RATE_CHECKPOINTS: [usize; 2] = [50, 100];

/// A file to be written under the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, text: String) -> Self {
        Artifact { name: name.into(), bytes: text.into_bytes() }
    }

    pub fn as_str(&self) -> Option<&str> {
        std::str::from_utf8(&self.bytes).ok()
    }
}

/// Everything a run produced, before anything touches the disk.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Human readable digest for stdout.
    pub summary: String,
    /// Cells whose iterates diverged.
    pub diverged: Vec<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> u8 {
        if self.diverged.is_empty() {
            0
        } else {
            1
        }
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    /// Writes every artifact below `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        self.artifacts
            .iter()
            .map(|a| {
                let path = dir.join(&a.name);
                fs::write(&path, &a.bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
                Ok(path)
            })
            .collect()
    }
}

/// Runs the configured app and returns its output without writing files.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::invalid(format!("cannot start {} workers: {e}", config.jobs)))?;
    pool.install(|| match config.app {
        App::Bp => run_bp(config),
        App::Potts => run_potts(config),
        App::Assign => run_assign(config),
        App::Counterexample => run_counterexample(config),
        App::Certify => run_certify(config),
    })
}

/// Splits a cell result into success, recorded divergence, or a hard error.
fn settle<T>(label: &str, result: genpd_core::Result<T>, diverged: &mut Vec<String>) -> Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(e @ CoreError::Diverged { .. }) => {
            diverged.push(format!("{label}: {e}"));
            Ok(None)
        }
        Err(e) => Err(CliError::invalid(format!("{label}: {e}"))),
    }
}

fn label(instance: &str, rule: StepRule) -> String {
    format!("{instance}_{rule}")
}

/// Table plus summary in the configured format.
fn table_artifacts(app: &str, rows: &[BenchRow], format: Format, out: &mut RunOutput) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let table = emit_table(rows, format)?;
    let summary_md = emit_summary(rows, Format::Markdown)?;
    match format {
        Format::Csv => {
            out.artifacts.push(Artifact::text(format!("{app}_table.csv"), table));
            out.artifacts.push(Artifact::text(format!("{app}_summary.csv"), emit_summary(rows, Format::Csv)?));
        }
        Format::Markdown => {
            out.artifacts.push(Artifact::text(format!("{app}_table.md"), format!("{table}\n{summary_md}")));
        }
    }
    out.summary.push_str(&summary_md);
    Ok(())
}

fn manual_params(config: &RunConfig, rule: StepRule) -> SolverParams {
    let (r, s) = config.manual.expect("validated: manual rule has r and s");
    SolverParams::new(r, s, config.alpha_for(rule), StepRule::Manual)
}

fn run_bp(config: &RunConfig) -> Result<RunOutput> {
    let instances = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let inst = BpInstance::generate(config.n, seed)?;
            let rho = inst.rho()?;
            Ok((format!("n{}-seed{seed}", config.n), inst, rho))
        })
        .collect::<genpd_core::Result<Vec<_>>>()?;
    let cells: Vec<(usize, StepRule)> =
        (0..instances.len()).flat_map(|i| config.rules.iter().map(move |r| (i, *r))).collect();

    let results: Vec<genpd_core::Result<(BenchRow, Option<String>)>> = cells
        .par_iter()
        .map(|&(i, rule)| {
            let (id, inst, rho) = &instances[i];
            let params = if rule == StepRule::Manual {
                let p = manual_params(config, rule);
                p.validate(*rho)?;
                p
            } else {
                bp::params_for_rho(*rho, rule, config.alpha_for(rule))?
            };
            let params = config.tune(params).with_history(config.history);
            let clock = Instant::now();
            let rep = bp::solve_with(inst, params)?;
            let row = BenchRow {
                instance: id.clone(),
                rule,
                alpha: params.alpha,
                iterations: rep.iterations(),
                wall_time: clock.elapsed().as_secs_f64(),
                objective: rep.l1,
                violation: rep.violation,
            };
            Ok((row, rep.solve.history.as_deref().map(artifacts::history_csv)))
        })
        .collect();

    let mut out = RunOutput::default();
    let mut rows = Vec::new();
    for ((i, rule), result) in cells.iter().zip(results) {
        let name = label(&instances[*i].0, *rule);
        if let Some((row, history)) = settle(&name, result, &mut out.diverged)? {
            rows.push(row);
            if let Some(h) = history {
                out.artifacts.push(Artifact::text(format!("bp_history_{name}.csv"), h));
            }
        }
    }
    table_artifacts("bp", &rows, config.format, &mut out)?;

    if config.alpha_sweep {
        let sweeps = instances
            .par_iter()
            .map(|(id, inst, _)| Ok((id.clone(), bp::alpha_sweep(inst, &bp::default_alpha_grid())?)))
            .collect::<genpd_core::Result<Vec<_>>>();
        for (id, points) in settle("alpha sweep", sweeps, &mut out.diverged)?.unwrap_or_default() {
            out.artifacts.push(Artifact::text(format!("bp_alpha_sweep_{id}.csv"), artifacts::alpha_sweep_csv(&points)));
        }
    }
    Ok(out)
}

/// Relaxed Potts energy `sum_i <c_i, u_i> + mu sum_i sum_x |grad u_i(x)|`.
pub fn potts_energy(instance: &PottsInstance, u: &[f64]) -> Result<f64> {
    let n = instance.pixels();
    let mut energy = 0.0;
    for i in 0..instance.labels {
        let ui = &u[i * n..(i + 1) * n];
        energy += instance.cost(i).iter().zip(ui).map(|(c, v)| c * v).sum::<f64>();
        let g = instance.grid.gradient(ui)?;
        energy += instance.mu * (0..n).map(|k| g[k].hypot(g[n + k])).sum::<f64>();
    }
    Ok(energy)
}

struct PottsImage {
    id: String,
    instance: PottsInstance,
    truth: Option<Vec<usize>>,
    input: Option<Vec<f64>>,
}

fn potts_images(config: &RunConfig) -> Result<Vec<PottsImage>> {
    if let Some(path) = &config.input {
        let bytes = fs::read(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let img = GrayImage::decode(&bytes)?;
        let grid = Grid::new(img.width, img.height)?;
        let instance = PottsInstance::from_intensities(grid, &img.intensities(), &config.means, config.mu)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
        return Ok(vec![PottsImage { id: format!("{stem}-{}x{}", img.width, img.height), instance, truth: None, input: None }]);
    }
    let means: [f64; 4] = config.means[..].try_into().map_err(|_| CliError::invalid("four means expected"))?;
    config
        .seeds
        .iter()
        .map(|&seed| {
            let (grid, image, truth) = potts::quadrant_image(config.size, &means, config.noise, seed)?;
            let instance = PottsInstance::from_intensities(grid, &image, &config.means, config.mu)?;
            let id = format!("{0}x{0}-seed{seed}", config.size);
            Ok(PottsImage { id, instance, truth: Some(truth), input: Some(image) })
        })
        .collect()
}

fn run_potts(config: &RunConfig) -> Result<RunOutput> {
    let images = potts_images(config)?;
    let m = config.means.len();
    // (image, rule, r, s, instance id)
    let mut cells = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for &rule in &config.rules {
            if rule == StepRule::Manual {
                let (r, s) = config.manual.expect("validated");
                cells.push((i, rule, r, s, format!("{}-manual", img.id)));
                continue;
            }
            let factor = if rule == StepRule::Optimal { 0.75 } else { 1.0 };
            for &s in &config.s_values {
                let p = PottsParams::from_product(m, factor, s)?;
                cells.push((i, rule, p.r, s, format!("{}-s{s}", img.id)));
            }
        }
    }

    let results: Vec<genpd_core::Result<_>> = cells
        .par_iter()
        .map(|(i, _, r, s, _)| {
            let inst = &images[*i].instance;
            let mut params = PottsParams { r: *r, s: *s, tol: potts::ADE_TOL, max_iter: 100_000 };
            if let Some(tol) = config.tol {
                params.tol = tol;
            }
            if let Some(max_iter) = config.max_iter {
                params.max_iter = max_iter;
            }
            let clock = Instant::now();
            let rep = potts::solve_potts(inst, &params)?;
            Ok((rep, clock.elapsed().as_secs_f64()))
        })
        .collect();

    let mut out = RunOutput::default();
    let mut rows = Vec::new();
    let mut report = Vec::new();
    let mut last_labels: Vec<Option<Vec<usize>>> = vec![None; images.len()];
    for ((i, rule, r, s, id), result) in cells.iter().zip(results) {
        let name = label(id, *rule);
        let Some((rep, wall_time)) = settle(&name, result, &mut out.diverged)? else { continue };
        let img = &images[*i];
        let energy = potts_energy(&img.instance, &rep.state.u)?;
        let defect = potts::simplex_defect(&rep.state.u, m);
        let accuracy = img.truth.as_ref().map(|t| {
            t.iter().zip(&rep.labels).filter(|(a, b)| a == b).count() as f64 / t.len() as f64
        });
        rows.push(BenchRow {
            instance: id.clone(),
            rule: *rule,
            alpha: 1.0,
            iterations: rep.iterations,
            wall_time,
            objective: energy,
            violation: defect,
        });
        report.push(vec![
            id.clone(),
            rule.to_string(),
            r.to_string(),
            s.to_string(),
            rep.iterations.to_string(),
            format!("{:e}", rep.final_ade),
            energy.to_string(),
            format!("{defect:e}"),
            accuracy.map(|a| a.to_string()).unwrap_or_default(),
        ]);
        out.artifacts.push(Artifact::text(format!("potts_ade_{name}.csv"), artifacts::ade_csv(&rep.ade_history)));
        last_labels[*i] = Some(rep.labels);
    }
    table_artifacts("potts", &rows, config.format, &mut out)?;
    if !report.is_empty() {
        let header = ["instance", "rule", "r", "s", "iterations", "final_ade", "energy", "simplex_defect", "accuracy"];
        out.artifacts.push(Artifact::text("potts_report.csv", artifacts::csv_text(&header, report)));
    }
    for (img, labels) in images.iter().zip(last_labels) {
        let grid = img.instance.grid;
        if let Some(labels) = labels {
            let pgm = GrayImage::from_labels(grid.width, grid.height, &labels, m)?;
            out.artifacts.push(Artifact { name: format!("potts_labels_{}.pgm", img.id), bytes: pgm.encode() });
        }
        if let Some(input) = &img.input {
            let pgm = GrayImage::from_unit(grid.width, grid.height, input)?;
            out.artifacts.push(Artifact { name: format!("potts_input_{}.pgm", img.id), bytes: pgm.encode() });
        }
    }
    Ok(out)
}

fn assignment_instances(config: &RunConfig) -> Result<Vec<(String, AssignmentInstance)>> {
    if let Some(path) = &config.costs {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let (n, costs) = artifacts::parse_cost_matrix(&text)?;
        return Ok(vec![(format!("costs-n{n}"), AssignmentInstance::from_costs(n, costs)?)]);
    }
    config
        .seeds
        .iter()
        .map(|&seed| Ok((format!("n{}-seed{seed}", config.n), AssignmentInstance::generate(config.n, seed)?)))
        .collect()
}

fn assignment_params(config: &RunConfig, rule: StepRule, n: usize) -> genpd_core::Result<SolverParams> {
    let params = if rule == StepRule::Manual {
        let p = manual_params(config, rule);
        p.validate(assign::spectral_facts(n)?.rho)?;
        p
    } else {
        assign::params_for(rule, n, config.alpha_for(rule))?
    };
    Ok(config.tune(params))
}

fn run_assign(config: &RunConfig) -> Result<RunOutput> {
    let instances = assignment_instances(config)?;
    let cells: Vec<(usize, StepRule)> =
        (0..instances.len()).flat_map(|i| config.rules.iter().map(move |r| (i, *r))).collect();
    let results: Vec<genpd_core::Result<_>> = cells
        .par_iter()
        .map(|&(i, rule)| {
            let inst = &instances[i].1;
            let params = assignment_params(config, rule, inst.n)?;
            let clock = Instant::now();
            let rep = assign::solve_with(inst, params)?;
            Ok((rep, clock.elapsed().as_secs_f64()))
        })
        .collect();

    let mut out = RunOutput::default();
    let mut rows = Vec::new();
    let mut report = Vec::new();
    for ((i, rule), result) in cells.iter().zip(results) {
        let id = &instances[*i].0;
        let name = label(id, *rule);
        let Some((rep, wall_time)) = settle(&name, result, &mut out.diverged)? else { continue };
        rows.push(BenchRow {
            instance: id.clone(),
            rule: *rule,
            alpha: rep.params.alpha,
            iterations: rep.iterations(),
            wall_time,
            objective: rep.phi,
            violation: rep.max_sum_defect,
        });
        report.push(vec![
            id.clone(),
            rule.to_string(),
            rep.params.r.to_string(),
            rep.params.s.to_string(),
            rep.iterations().to_string(),
            rep.phi.to_string(),
            rep.phi_rounded.map(|p| p.to_string()).unwrap_or_default(),
            format!("{:e}", rep.max_sum_defect),
            format!("{:e}", rep.max_integrality_gap),
            rep.local_condition.to_string(),
        ]);
        if let Some(perm) = &rep.permutation {
            out.artifacts.push(Artifact::text(format!("assign_perm_{name}.txt"), artifacts::permutation_text(perm)));
        }
    }
    table_artifacts("assign", &rows, config.format, &mut out)?;
    if !report.is_empty() {
        let header = [
            "instance",
            "rule",
            "r",
            "s",
            "iterations",
            "phi",
            "phi_rounded",
            "max_sum_defect",
            "max_integrality_gap",
            "local_condition",
        ];
        out.artifacts.push(Artifact::text("assign_report.csv", artifacts::csv_text(&header, report)));
    }
    Ok(out)
}

fn run_counterexample(config: &RunConfig) -> Result<RunOutput> {
    let (start, stop, step) = config.sweep;
    let grid = counterexample::r_grid(start, stop, step)?;
    let rows = counterexample::sweep(&grid, [1.0, 1.0], config.steps)?;
    let mut out = RunOutput::default();
    out.artifacts.push(Artifact::text("counterexample_sweep.csv", artifacts::counterexample_csv(&rows)));
    for row in &rows {
        out.summary.push_str(&format!("r = {:<6} {}\n", row.r, row.classification.name()));
    }
    if let Some(r) = config.trace {
        let sim = counterexample::simulate(r, [1.0, 1.0], config.steps)?;
        out.summary.push_str(&match sim.escaped_at {
            Some(k) => format!("trace r = {r}: |u|_inf passed 1e12 at step {k}\n"),
            None => format!("trace r = {r}: bounded over {} steps\n", config.steps),
        });
        out.artifacts.push(Artifact::text(format!("counterexample_trace_r{r}.csv"), artifacts::trajectory_csv(&sim)));
    }
    Ok(out)
}

/// Outcome of the certificate checks on one run.
#[derive(Clone, Debug)]
pub struct Certification {
    pub params: SolverParams,
    pub contraction: CertificateReport,
    pub residuals: Vec<f64>,
    pub monotonicity: CertificateReport,
    pub rate: Option<RateReport>,
}

/// Pre-solves for `u*`, records `steps` iterations and checks the
/// contraction, monotonicity and rate properties with dense matrices.
pub fn certify_run<P: SaddleProblem + ?Sized>(
    problem: &P,
    a: &DenseMatrix,
    params: SolverParams,
    start: Iterate,
    steps: usize,
) -> genpd_core::Result<Certification> {
    let reference = params.with_tol(REFERENCE_TOL).with_max_iter(REFERENCE_MAX_ITER);
    let star = solve(problem, &reference, start.clone(), &mut [])?;
    if star.diverged() {
        return Err(CoreError::Diverged { iterations: star.iterations });
    }
    let certs = certify::build_matrices(a, params.r, params.s, params.alpha)?;
    let traj = certify::record_trajectory(problem, &params, start, steps)?;
    let contraction = certify::contraction_check(&traj, &star.final_iterate.point(), &certs)?;
    let residuals = certify::residual_sequence(&traj, &certs);
    let monotonicity = certify::residual_monotonicity_check(&traj, &certs)?;
    let checkpoints: Vec<usize> = RATE_CHECKPOINTS.iter().copied().filter(|k| *k < residuals.len()).collect();
    let rate = if residuals.len() > RATE_PILOT && !checkpoints.is_empty() {
        Some(certify::rate_check(&residuals, RATE_PILOT, &checkpoints)?)
    } else {
        None
    };
    Ok(Certification { params, contraction, residuals, monotonicity, rate })
}

fn run_certify(config: &RunConfig) -> Result<RunOutput> {
    let cells: Vec<(u64, StepRule)> =
        config.seeds.iter().flat_map(|s| config.rules.iter().map(move |r| (*s, *r))).collect();
    let results: Vec<genpd_core::Result<Certification>> = cells
        .par_iter()
        .map(|&(seed, rule)| match config.problem {
            App::Bp => {
                let inst = BpInstance::generate(config.n, seed)?;
                let rho = inst.rho()?;
                let params = if rule == StepRule::Manual {
                    manual_params(config, rule)
                } else {
                    bp::params_for_rho(rho, rule, config.alpha_for(rule))?
                };
                let start = Iterate::zeros(inst.n(), inst.m());
                certify_run(&inst.problem(), &inst.a, config.tune(params), start, config.steps)
            }
            _ => {
                let inst = AssignmentInstance::generate(config.n, seed)?;
                let params = assignment_params(config, rule, config.n)?;
                let a = materialize(&inst.operator())?;
                certify_run(&inst.problem(), &a, params, inst.start(), config.steps)
            }
        })
        .collect();

    let mut out = RunOutput::default();
    let mut summary = Vec::new();
    for ((seed, rule), result) in cells.iter().zip(results) {
        let id = format!("{}-n{}-seed{seed}", config.problem.name(), config.n);
        let name = label(&id, *rule);
        let Some(c) = settle(&name, result, &mut out.diverged)? else { continue };
        out.artifacts.push(Artifact::text(format!("certificate_{name}.csv"), artifacts::certificate_csv(&c.contraction)));
        out.artifacts.push(Artifact::text(format!("residuals_{name}.csv"), artifacts::residual_csv(&c.residuals)));
        let rate = c.rate.as_ref().map(|r| r.holds().to_string()).unwrap_or_default();
        out.summary.push_str(&format!(
            "{name}: metric valid {}, contraction {} ({} violations, max {:e}), residuals nonincreasing {}, rate {}\n",
            c.contraction.metric_valid,
            verdict(c.contraction.holds()),
            c.contraction.violations(),
            c.contraction.max_violation,
            c.monotonicity.violations() == 0,
            if rate.is_empty() { "not checked" } else { &rate },
        ));
        summary.push(vec![
            id,
            rule.to_string(),
            c.params.alpha.to_string(),
            c.params.r.to_string(),
            c.params.s.to_string(),
            c.contraction.metric_valid.to_string(),
            c.contraction.violations().to_string(),
            format!("{:e}", c.contraction.max_violation),
            (c.monotonicity.violations() == 0).to_string(),
            rate,
        ]);
    }
    if !summary.is_empty() {
        let header = [
            "instance",
            "rule",
            "alpha",
            "r",
            "s",
            "metric_valid",
            "contraction_violations",
            "max_violation",
            "monotone",
            "rate_holds",
        ];
        out.artifacts.push(Artifact::text("certify_summary.csv", artifacts::csv_text(&header, summary)));
    }
    Ok(out)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "FAILS"
    }
}
