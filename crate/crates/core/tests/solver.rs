mod common;

use genpd_core::apps::bp::shrink;
use genpd_core::counterexample::counterexample_problem;
use genpd_core::model::{BoxIndicator, HalfSquaredNorm, LinearBox, Problem};
use genpd_core::pdsolver::{check_step_condition, solve, step, StopMetric};
use genpd_core::rng::{streams, Stream};
use genpd_core::{Error, Iterate, SolverParams, StepRule, StopReason};

#[test]
fn step_matches_reference_on_equality_problems() {
    for seed in 0..20u64 {
        let a = common::gaussian_matrix(seed, 4, 7);
        let mut g = Stream::new(seed, streams::START);
        let b = common::gaussian_vec(&mut g, 4);
        let problem = Problem::linear_equality(&a, genpd_core::apps::bp::L1Norm, b.clone()).unwrap();
        let alpha = g.unit();
        let rho = common::rho_dense(&a);
        let (r, s) = (1.3, 1.1 * rho / 1.3);
        let params = SolverParams::new(r, s, alpha, StepRule::Manual);
        let x = common::gaussian_vec(&mut g, 7);
        let y = common::gaussian_vec(&mut g, 4);
        let (next, _) = step(&problem, &params, &Iterate::new(x.clone(), y.clone())).unwrap();
        let prox_f = |v: &[f64], t: f64| shrink(v, t);
        let prox_g = |w: &[f64], t: f64| w.iter().zip(&b).map(|(wi, bi)| wi + t * bi).collect();
        let (xr, yr) = common::reference_step(&a, &prox_f, &prox_g, r, s, alpha, &x, &y);
        assert!(common::rel_dist(&next.x, &xr) < 1e-12);
        assert!(common::rel_dist(&next.y, &yr) < 1e-12);
    }
}

#[test]
fn step_matches_reference_with_nonlinear_dual() {
    for seed in 0..20u64 {
        let a = common::gaussian_matrix(seed + 100, 5, 3);
        let problem = Problem::new(&a, BoxIndicator { lo: -1.0, hi: 1.0 }, HalfSquaredNorm);
        let mut g = Stream::new(seed, streams::START);
        let alpha = g.unit();
        let (r, s) = (2.0, common::rho_dense(&a));
        let params = SolverParams::new(r, s, alpha, StepRule::Manual);
        let x: Vec<f64> = (0..3).map(|_| g.uniform(-1.0, 1.0)).collect();
        let y = common::gaussian_vec(&mut g, 5);
        let (next, rec) = step(&problem, &params, &Iterate::new(x.clone(), y.clone())).unwrap();
        let prox_f = |v: &[f64], _t: f64| v.iter().map(|z| z.clamp(-1.0, 1.0)).collect();
        let prox_g = |w: &[f64], t: f64| w.iter().map(|z| z / (1.0 + t)).collect();
        let (xr, yr) = common::reference_step(&a, &prox_f, &prox_g, r, s, alpha, &x, &y);
        assert!(common::rel_dist(&next.x, &xr) < 1e-12);
        assert!(common::rel_dist(&next.y, &yr) < 1e-12);
        let xbar: Vec<f64> = rec.x_next.iter().zip(&x).map(|(p, q)| p + alpha * (p - q)).collect();
        assert_eq!(rec.x_bar, xbar);
    }
}

#[test]
fn classic_counterexample_diverges_below_three_quarters() {
    let p = counterexample_problem();
    let params = SolverParams::new(0.7, 1.0, 1.0, StepRule::Manual).with_max_iter(10_000);
    let rep = solve(&p, &params, Iterate::new(vec![1.0], vec![1.0]), &mut []).unwrap();
    assert_eq!(rep.stop_reason, StopReason::Divergence);
    assert!(rep.diverged());
    let params = SolverParams::new(0.8, 1.0, 1.0, StepRule::Manual).with_max_iter(100_000);
    let rep = solve(&p, &params, Iterate::new(vec![1.0], vec![1.0]), &mut []).unwrap();
    assert_eq!(rep.stop_reason, StopReason::Tolerance);
}

#[test]
fn equality_problems_ignore_alpha() {
    let a = common::gaussian_matrix(5, 6, 10);
    let mut g = Stream::new(5, streams::VALUES);
    let b = common::gaussian_vec(&mut g, 6);
    let cost = common::gaussian_vec(&mut g, 10);
    let p = Problem::linear_equality(&a, LinearBox { cost, lo: -2.0, hi: 2.0 }, b).unwrap();
    let rho = common::rho_dense(&a);
    let run = |alpha: f64| {
        let params = SolverParams::new(1.0, 1.2 * rho, alpha, StepRule::Manual).with_max_iter(200).with_tol(1e-300);
        let mut xs = Vec::new();
        let mut mon = |it: &Iterate, _: &genpd_core::StepRecord| xs.push((it.x.clone(), it.y.clone()));
        solve(&p, &params, Iterate::zeros(10, 6), &mut [&mut mon]).unwrap();
        xs
    };
    let base = run(1.0);
    for alpha in [0.0, 0.3, 0.5] {
        for (u, v) in run(alpha).iter().zip(&base) {
            assert!(common::rel_dist(&u.0, &v.0) < 1e-10);
            assert!(common::rel_dist(&u.1, &v.1) < 1e-10);
        }
    }
}

#[test]
fn step_condition_and_validation() {
    assert!(check_step_condition(1.0, 1.0, 0.5, 1.0).unwrap());
    assert!(!check_step_condition(0.7, 1.0, 0.5, 1.0).unwrap());
    assert!(!check_step_condition(1.0, 1.0, 1.0, 1.0).unwrap());
    assert!(check_step_condition(-1.0, 1.0, 0.5, 1.0).is_err());

    let p = SolverParams::new(1.0, 0.5, 1.0, StepRule::Classic);
    assert!(matches!(p.validate(1.0), Err(Error::ConditionViolated { .. })));
    let p = SolverParams::new(1.0, 0.76, 0.5, StepRule::Optimal);
    assert!(p.validate(1.0).is_ok());
    assert!(SolverParams::new(1.0, 1.0, 0.3, StepRule::Optimal).validate(0.1).is_err());
    assert!(SolverParams::new(1.0, 1.0, 1.5, StepRule::Improved).validate(0.1).is_err());
    assert!(SolverParams::new(1.0, 1.0, 1.5, StepRule::Manual).validate(0.1).is_ok());
    assert!(SolverParams::new(1.0, 1.0, 0.5, StepRule::Heuristic).validate(100.0).unwrap().is_some());
}

#[test]
fn rule_names_round_trip() {
    for rule in StepRule::ALL {
        assert_eq!(rule.name().parse::<StepRule>().unwrap(), rule);
        assert_eq!(rule.to_string().to_uppercase().parse::<StepRule>().unwrap(), rule);
    }
    assert!("fastest".parse::<StepRule>().is_err());
}

#[test]
fn max_norm_stopping() {
    let a = common::gaussian_matrix(9, 3, 5);
    let p = Problem::new(&a, BoxIndicator { lo: -1.0, hi: 1.0 }, HalfSquaredNorm);
    let params = SolverParams::new(1.0, common::rho_dense(&a), 0.5, StepRule::Manual)
        .with_stop_metric(StopMetric::MaxNorm)
        .with_tol(1e-10);
    let rep = solve(&p, &params, Iterate::new(vec![0.5; 5], vec![1.0; 3]), &mut []).unwrap();
    assert_eq!(rep.stop_reason, StopReason::Tolerance);
    assert!(rep.last_stop_measure < 1e-10);
    // min over the box of |Ax|^2 / 2 is attained on the null space; y* = -Ax* = 0
    let ax = genpd_core::LinearMap::apply(&a, &rep.final_iterate.x).unwrap();
    assert!(ax.iter().all(|v| v.abs() < 1e-8));
    assert!(rep.final_iterate.y.iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn infeasible_start_rejected() {
    let a = common::gaussian_matrix(9, 3, 5);
    let p = Problem::new(&a, BoxIndicator { lo: -1.0, hi: 1.0 }, HalfSquaredNorm);
    let params = SolverParams::new(1.0, 10.0, 0.5, StepRule::Manual);
    assert!(matches!(solve(&p, &params, Iterate::new(vec![5.0; 5], vec![0.0; 3]), &mut []), Err(Error::Infeasible(_))));
    assert!(matches!(solve(&p, &params, Iterate::zeros(4, 3), &mut []), Err(Error::DimensionMismatch { .. })));
}
