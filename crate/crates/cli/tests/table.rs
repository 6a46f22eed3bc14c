use genpd::table::{emit_summary, sort_rows};
use genpd::{emit_table, parse_csv, BenchRow, Format};
use genpd_core::StepRule;

fn row(instance: &str, rule: StepRule, alpha: f64, iterations: usize) -> BenchRow {
    BenchRow {
        instance: instance.to_string(),
        rule,
        alpha,
        iterations,
        wall_time: 0.012_345_678_9,
        objective: 27.982_131_046_731_05,
        violation: 1.130_478_1e-7,
    }
}

#[test]
fn single_row_is_header_plus_one_line() {
    let text = emit_table(&[row("n100-seed1", StepRule::Classic, 1.0, 671)], Format::Csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "instance,rule,alpha,iterations,wall_time,objective,violation");
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn empty_input_is_an_error() {
    assert!(emit_table(&[], Format::Csv).is_err());
    assert!(emit_table(&[], Format::Markdown).is_err());
    assert!(emit_summary(&[], Format::Markdown).is_err());
}

#[test]
fn two_rules_give_paired_columns() {
    let rows = vec![
        row("n100-seed2", StepRule::Optimal, 0.5, 1713),
        row("n100-seed1", StepRule::Optimal, 0.5, 520),
        row("n100-seed1", StepRule::Classic, 1.0, 671),
        row("n100-seed2", StepRule::Classic, 1.0, 2268),
    ];
    let md = emit_table(&rows, Format::Markdown).unwrap();
    let lines: Vec<&str> = md.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "| instance | classic It. | classic CPU | classic objective | classic violation \
         | optimal It. | optimal CPU | optimal objective | optimal violation | It. ratio |"
    );
    assert!(lines[2].starts_with("| n100-seed1 | 671 | 0.012 | 27.982131 | 1.13e-7 | 520 |"), "{}", lines[2]);
    assert!(lines[2].ends_with("| 0.775 |"));
    assert!(lines[3].starts_with("| n100-seed2 | 2268 |"));
}

#[test]
fn missing_cell_is_dashed() {
    let rows = vec![row("a", StepRule::Classic, 1.0, 10), row("a", StepRule::Optimal, 0.5, 8), row("b", StepRule::Classic, 1.0, 12)];
    let md = emit_table(&rows, Format::Markdown).unwrap();
    assert!(md.lines().nth(3).unwrap().ends_with("| - | - | - | - | - |"));
}

#[test]
fn csv_round_trip_is_exact() {
    let mut rows = Vec::new();
    let mut x = 0.123_456_789_f64;
    for seed in 1..=12 {
        for (rule, alpha) in [(StepRule::Classic, 1.0), (StepRule::Improved, 0.3), (StepRule::Optimal, 0.5)] {
            x = (x * 7.3 + 0.1).fract();
            rows.push(BenchRow {
                instance: format!("n{}-seed{seed}", 20 * seed),
                rule,
                alpha,
                iterations: (x * 1e4) as usize,
                wall_time: x / 3.0,
                objective: x * 1e3 - 17.0,
                violation: x * 1e-9,
            });
        }
    }
    let text = emit_table(&rows, Format::Csv).unwrap();
    let back = parse_csv(&text).unwrap();
    let mut expected = rows.clone();
    sort_rows(&mut expected);
    assert_eq!(back, expected);
    assert_eq!(emit_table(&back, Format::Csv).unwrap(), text);
}

#[test]
fn special_values_round_trip() {
    let mut r = row("x", StepRule::Heuristic, 1.0, 0);
    r.violation = 0.0;
    r.objective = -1e300;
    r.wall_time = 5e-324;
    let text = emit_table(&[r.clone()], Format::Csv).unwrap();
    assert!(text.contains(",0e0\n"));
    assert_eq!(parse_csv(&text).unwrap(), vec![r]);
}

#[test]
fn ordering_does_not_depend_on_input_order() {
    let mut rows = vec![
        row("n100-seed10", StepRule::Classic, 1.0, 1),
        row("n100-seed9", StepRule::Optimal, 0.5, 2),
        row("n100-seed9", StepRule::Classic, 1.0, 3),
        row("n20-seed1", StepRule::Heuristic, 1.0, 4),
    ];
    let a = emit_table(&rows, Format::Csv).unwrap();
    rows.reverse();
    assert_eq!(emit_table(&rows, Format::Csv).unwrap(), a);
    let order: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(order, ["n20-seed1", "n100-seed9", "n100-seed9", "n100-seed10"]);
}

#[test]
fn parse_rejects_foreign_csv() {
    assert!(parse_csv("a,b\n1,2\n").is_err());
    let good = emit_table(&[row("a", StepRule::Classic, 1.0, 3)], Format::Csv).unwrap();
    assert!(parse_csv(&good.replace(",classic,", ",fastest,")).is_err());
    assert!(parse_csv(&good.replace(",3,", ",three,")).is_err());
}
