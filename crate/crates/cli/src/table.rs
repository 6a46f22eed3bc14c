//! Benchmark rows and their CSV / markdown tables.

use std::cmp::Ordering;
use std::fmt::Write as _;

use genpd_core::StepRule;

use crate::config::Format;
use crate::error::{CliError, Result};

/// One solver run in a benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub rule: StepRule,
    pub alpha: f64,
    pub iterations: usize,
    /// Seconds; reported, never compared.
    pub wall_time: f64,
    pub objective: f64,
    pub violation: f64,
}

pub const CSV_HEADER: [&str; 7] = ["instance", "rule", "alpha", "iterations", "wall_time", "objective", "violation"];

/// Compares strings treating runs of digits as numbers, so `n9 < n10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, _) => return Ordering::Less,
            (_, None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (trim_zeros(&a[..da]), trim_zeros(&b[..db]));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb)).then(da.cmp(&db));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let k = digits.iter().take_while(|c| **c == b'0').count();
    &digits[k.min(digits.len().saturating_sub(1))..]
}

fn rule_rank(rule: StepRule) -> usize {
    StepRule::ALL.iter().position(|r| *r == rule).unwrap_or(usize::MAX)
}

/// Instance (natural order), then rule, then alpha.
pub fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| {
        natural_cmp(&a.instance, &b.instance)
            .then(rule_rank(a.rule).cmp(&rule_rank(b.rule)))
            .then(a.alpha.total_cmp(&b.alpha))
    });
}

fn ordered(rows: &[BenchRow]) -> Result<Vec<BenchRow>> {
    if rows.is_empty() {
        return Err(CliError::Format { what: "table", message: "no rows".into() });
    }
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn emit_table(rows: &[BenchRow], format: Format) -> Result<String> {
    let rows = ordered(rows)?;
    Ok(match format {
        Format::Csv => emit_csv(&rows),
        Format::Markdown => emit_markdown(&rows),
    })
}

fn emit_csv(rows: &[BenchRow]) -> String {
    let records = rows.iter().map(|r| {
        vec![
            r.instance.clone(),
            r.rule.name().to_string(),
            r.alpha.to_string(),
            r.iterations.to_string(),
            r.wall_time.to_string(),
            r.objective.to_string(),
            format!("{:e}", r.violation),
        ]
    });
    crate::artifacts::csv_text(&CSV_HEADER, records)
}

/// Rules in table order, as they occur in `rows`.
fn rules_of(rows: &[BenchRow]) -> Vec<(StepRule, f64)> {
    let mut rules: Vec<(StepRule, f64)> = Vec::new();
    for r in rows {
        if !rules.iter().any(|(rule, alpha)| *rule == r.rule && *alpha == r.alpha) {
            rules.push((r.rule, r.alpha));
        }
    }
    rules.sort_by(|a, b| rule_rank(a.0).cmp(&rule_rank(b.0)).then(a.1.total_cmp(&b.1)));
    rules
}

fn rule_label(rules: &[(StepRule, f64)], rule: StepRule, alpha: f64) -> String {
    if rules.iter().filter(|(r, _)| *r == rule).count() > 1 {
        format!("{rule} a={alpha}")
    } else {
        rule.to_string()
    }
}

/// Instances down the side, one `It. / CPU / objective / violation` block
/// per rule across, and the iteration ratio of the last rule to the first.
fn emit_markdown(rows: &[BenchRow]) -> String {
    let rules = rules_of(rows);
    let mut header = vec!["instance".to_string()];
    for &(rule, alpha) in &rules {
        let label = rule_label(&rules, rule, alpha);
        for col in ["It.", "CPU", "objective", "violation"] {
            header.push(format!("{label} {col}"));
        }
    }
    if rules.len() > 1 {
        header.push("It. ratio".into());
    }
    let mut out = String::new();
    push_md_row(&mut out, &header);
    push_md_row(&mut out, &header.iter().map(|_| "---".to_string()).collect::<Vec<_>>());

    let mut start = 0;
    while start < rows.len() {
        let end = start + rows[start..].iter().take_while(|r| r.instance == rows[start].instance).count();
        let group = &rows[start..end];
        let mut line = vec![group[0].instance.clone()];
        let find = |rule: StepRule, alpha: f64| group.iter().find(|r| r.rule == rule && r.alpha == alpha);
        for &(rule, alpha) in &rules {
            match find(rule, alpha) {
                Some(r) => {
                    line.push(r.iterations.to_string());
                    line.push(format!("{:.3}", r.wall_time));
                    line.push(format!("{:.6}", r.objective));
                    line.push(format!("{:.2e}", r.violation));
                }
                None => line.extend(std::iter::repeat_n("-".to_string(), 4)),
            }
        }
        if rules.len() > 1 {
            let (first, last) = (rules[0], rules[rules.len() - 1]);
            line.push(match (find(first.0, first.1), find(last.0, last.1)) {
                (Some(a), Some(b)) if a.iterations > 0 => format!("{:.3}", b.iterations as f64 / a.iterations as f64),
                _ => "-".into(),
            });
        }
        push_md_row(&mut out, &line);
        start = end;
    }
    out
}

fn push_md_row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

/// Per-rule aggregate over all instances.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSummary {
    pub rule: StepRule,
    pub alpha: f64,
    pub runs: usize,
    pub mean_iterations: f64,
    /// Mean over instances of `iterations / iterations of the first rule`.
    pub mean_ratio: f64,
    pub total_wall_time: f64,
}

pub fn summarize(rows: &[BenchRow]) -> Result<Vec<RuleSummary>> {
    let rows = ordered(rows)?;
    let rules = rules_of(&rows);
    let base = rules[0];
    let base_of = |instance: &str| {
        rows.iter().find(|r| r.instance == instance && r.rule == base.0 && r.alpha == base.1).map(|r| r.iterations)
    };
    Ok(rules
        .iter()
        .map(|&(rule, alpha)| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.rule == rule && r.alpha == alpha).collect();
            let ratios: Vec<f64> = mine
                .iter()
                .filter_map(|r| base_of(&r.instance).filter(|b| *b > 0).map(|b| r.iterations as f64 / b as f64))
                .collect();
            let runs = mine.len();
            RuleSummary {
                rule,
                alpha,
                runs,
                mean_iterations: mine.iter().map(|r| r.iterations as f64).sum::<f64>() / runs as f64,
                mean_ratio: if ratios.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / ratios.len() as f64 },
                total_wall_time: mine.iter().map(|r| r.wall_time).sum(),
            }
        })
        .collect())
}

pub fn emit_summary(rows: &[BenchRow], format: Format) -> Result<String> {
    let summary = summarize(rows)?;
    let header = ["rule", "alpha", "runs", "mean It.", "mean It. ratio", "total CPU"];
    let cells: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.rule.to_string(),
                s.alpha.to_string(),
                s.runs.to_string(),
                format!("{:.1}", s.mean_iterations),
                format!("{:.3}", s.mean_ratio),
                format!("{:.3}", s.total_wall_time),
            ]
        })
        .collect();
    Ok(match format {
        Format::Csv => crate::artifacts::csv_text(&header, cells),
        Format::Markdown => {
            let mut out = String::new();
            push_md_row(&mut out, &header.map(String::from));
            push_md_row(&mut out, &header.map(|_| "---".to_string()));
            for line in &cells {
                push_md_row(&mut out, line);
            }
            out
        }
    })
}

/// Reads rows back from [`emit_table`] CSV output.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let bad = |message: String| CliError::Format { what: "benchmark csv", message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let float = |i: usize| record[i].parse::<f64>().map_err(|e| bad(format!("{}: {e}", CSV_HEADER[i])));
        rows.push(BenchRow {
            instance: record[0].to_string(),
            rule: record[1].parse().map_err(|e| bad(format!("{e}")))?,
            alpha: float(2)?,
            iterations: record[3].parse().map_err(|e| bad(format!("iterations: {e}")))?,
            wall_time: float(4)?,
            objective: float(5)?,
            violation: float(6)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: &str, rule: StepRule, iterations: usize) -> BenchRow {
        BenchRow { instance: instance.into(), rule, alpha: 1.0, iterations, wall_time: 0.5, objective: 2.0, violation: 1e-9 }
    }

    #[test]
    fn natural_order() {
        assert_eq!(natural_cmp("n9", "n10"), Ordering::Less);
        assert_eq!(natural_cmp("n10-seed2", "n10-seed10"), Ordering::Less);
        assert_eq!(natural_cmp("a", "b"), Ordering::Less);
        assert_eq!(natural_cmp("x007", "x7"), Ordering::Greater);
        assert_eq!(natural_cmp("x0", "x00"), Ordering::Less);
        assert_eq!(natural_cmp("same", "same"), Ordering::Equal);
    }

    #[test]
    fn rows_sort_by_instance_then_rule() {
        let mut rows = vec![
            row("seed10", StepRule::Classic, 1),
            row("seed2", StepRule::Optimal, 2),
            row("seed2", StepRule::Classic, 3),
        ];
        sort_rows(&mut rows);
        let keys: Vec<(&str, StepRule)> = rows.iter().map(|r| (r.instance.as_str(), r.rule)).collect();
        assert_eq!(keys, vec![("seed2", StepRule::Classic), ("seed2", StepRule::Optimal), ("seed10", StepRule::Classic)]);
    }

    #[test]
    fn violation_uses_scientific_notation() {
        let text = emit_table(&[row("a", StepRule::Classic, 5)], Format::Csv).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "a,classic,1,5,0.5,2,1e-9");
    }

    #[test]
    fn summary_ratio() {
        let rows = vec![
            row("a", StepRule::Classic, 100),
            row("a", StepRule::Optimal, 80),
            row("b", StepRule::Classic, 200),
            row("b", StepRule::Optimal, 120),
        ];
        let s = summarize(&rows).unwrap();
        assert_eq!(s[0].mean_ratio, 1.0);
        assert!((s[1].mean_ratio - 0.7).abs() < 1e-15);
        assert_eq!(s[1].mean_iterations, 100.0);
    }

    #[test]
    fn same_rule_different_alpha_gets_own_columns() {
        let mut b = row("a", StepRule::Improved, 4);
        b.alpha = 0.25;
        let mut c = b.clone();
        c.alpha = 0.75;
        let md = emit_table(&[b, c], Format::Markdown).unwrap();
        assert!(md.contains("improved a=0.25 It.") && md.contains("improved a=0.75 It."));
    }
}
