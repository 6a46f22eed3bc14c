//! Plot-ready CSV files: comma separated, LF line ends, `.`-decimal.

use genpd_core::certify::CertificateReport;
use genpd_core::counterexample::{self, SweepRow};
use genpd_core::pdsolver::HistoryRow;
use genpd_core::apps::bp::SweepPoint;

use crate::error::{CliError, Result};

pub fn csv_text<I, R, S>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("records are UTF-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// `k, step_norm, objective, violation` per iteration.
pub fn history_csv(history: &[HistoryRow]) -> String {
    csv_text(
        &["k", "step_norm", "objective", "violation"],
        history.iter().map(|h| vec![h.k.to_string(), format!("{:e}", h.step_norm), h.objective.to_string(), opt(h.constraint_violation)]),
    )
}

pub fn certificate_csv(report: &CertificateReport) -> String {
    csv_text(
        &["k", "lhs", "rhs", "violation"],
        report.rows.iter().map(|r| vec![r.k.to_string(), format!("{:e}", r.lhs), format!("{:e}", r.rhs), format!("{:e}", r.violation)]),
    )
}

/// `k, residual` for the sequence `|M(u^k - u~^k)|_H^2`.
pub fn residual_csv(values: &[f64]) -> String {
    csv_text(&["k", "residual"], values.iter().enumerate().map(|(k, v)| vec![k.to_string(), format!("{v:e}")]))
}

pub fn counterexample_csv(rows: &[SweepRow]) -> String {
    csv_text(
        &["r", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im", "spectral_radius", "classification", "growth_rate"],
        rows.iter().map(|row| {
            let radius = row.lambda1.modulus().max(row.lambda2.modulus());
            vec![
                row.r.to_string(),
                row.lambda1.re.to_string(),
                row.lambda1.im.to_string(),
                row.lambda2.re.to_string(),
                row.lambda2.im.to_string(),
                radius.to_string(),
                row.classification.name().to_string(),
                row.growth_rate.to_string(),
            ]
        }),
    )
}

/// `k, x, y, norm_inf` of a scalar counterexample run.
pub fn trajectory_csv(sim: &counterexample::Simulation) -> String {
    csv_text(
        &["k", "x", "y", "norm_inf"],
        sim.states.iter().zip(&sim.norms).enumerate().map(|(k, (u, n))| vec![k.to_string(), u[0].to_string(), u[1].to_string(), n.to_string()]),
    )
}

pub fn alpha_sweep_csv(points: &[SweepPoint]) -> String {
    csv_text(
        &["alpha", "iterations", "objective", "violation"],
        points.iter().map(|p| vec![p.alpha.to_string(), p.iterations.to_string(), p.objective.to_string(), format!("{:e}", p.violation)]),
    )
}

/// `iteration, ade` for a Potts run.
pub fn ade_csv(history: &[(usize, f64)]) -> String {
    csv_text(&["iteration", "ade"], history.iter().map(|(k, a)| vec![k.to_string(), format!("{a:e}")]))
}

/// One `i j` line per assigned pair.
pub fn permutation_text(perm: &[usize]) -> String {
    perm.iter().enumerate().map(|(i, j)| format!("{i} {j}\n")).collect()
}

/// Reads a square cost matrix: one row per line, entries separated by
/// commas or whitespace. Blank lines and lines starting with `#` are skipped.
pub fn parse_cost_matrix(text: &str) -> Result<(usize, Vec<f64>)> {
    let bad = |message: String| CliError::Format { what: "cost matrix", message };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("line {}: {t:?}: {e}", line_no + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n < 2 {
        return Err(bad("need at least two rows".into()));
    }
    if let Some(row) = rows.iter().find(|r| r.len() != n) {
        return Err(bad(format!("expected {n} entries per row, found {}", row.len())));
    }
    let costs: Vec<f64> = rows.concat();
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(bad("entries must be finite".into()));
    }
    Ok((n, costs))
}
