mod common;

use genpd_core::apps::assign::{params_for, AssignmentInstance};
use genpd_core::apps::bp::BpInstance;
use genpd_core::certify::{
    build_matrices, contraction_check, correct, ergodic_gap_check, is_positive_definite, predict, record_trajectory,
    residual_monotonicity_check, CertificateMetric, ErgodicAccumulator, OperatorMetric, ResidualMonitor,
    TrajectoryRecorder,
};
use genpd_core::counterexample::counterexample_problem;
use genpd_core::linops::materialize;
use genpd_core::model::{theta, ViPoint};
use genpd_core::pdsolver::{improvement_factor, solve, step};
use genpd_core::rng::{streams, Stream};
use genpd_core::{DenseMatrix, Iterate, SolverParams, StepRule};

#[test]
fn g_definiteness_follows_the_improved_condition() {
    for seed in 0..20u64 {
        let a = common::gaussian_matrix(seed, 5, 4);
        let rho = common::rho_dense(&a);
        let bound = improvement_factor(0.5) * rho;
        for (factor, expect) in [(1.05, true), (0.95, false)] {
            let s = factor * bound;
            let c = build_matrices(&a, 1.0, s, 0.5).unwrap();
            assert_eq!(is_positive_definite(&c.g, 0.0).unwrap(), expect, "seed {seed} factor {factor}");
            assert_eq!(common::eigenvalues(&c.g)[0] > 0.0, expect);
        }
        let h = build_matrices(&a, 1.0, 1.05 * rho, 1.0).unwrap().h;
        assert!(is_positive_definite(&h, 0.0).unwrap());
    }
}

#[test]
fn closed_forms_agree() {
    let a = common::gaussian_matrix(2, 6, 3);
    for alpha in [0.0, 0.3, 0.5, 1.0] {
        let c = build_matrices(&a, 0.7, 2.2, alpha).unwrap();
        assert!(c.h_deviation < 1e-12 && c.g_deviation < 1e-12);
        assert_eq!(c.h.asymmetry(), 0.0);
        assert_eq!(c.g.asymmetry(), 0.0);
    }
}

#[test]
fn predict_then_correct_is_the_step() {
    let inst = BpInstance::generate(40, 3).unwrap();
    let problem = inst.problem();
    let rho = inst.rho().unwrap();
    let mut g = Stream::new(11, streams::START);
    for _ in 0..200 {
        let alpha = g.unit();
        let params = SolverParams::new(0.3, improvement_factor(alpha) * rho / 0.3 * 1.01, alpha, StepRule::Improved);
        let u = Iterate::new(common::gaussian_vec(&mut g, 40), common::gaussian_vec(&mut g, 10));
        let pred = predict(&problem, &params, &u).unwrap();
        let next = correct(&&inst.a, &u, &pred, &params).unwrap();
        let (direct, rec) = step(&problem, &params, &u).unwrap();
        assert_eq!(next, direct);
        assert_eq!(pred.x_tilde, rec.x_next);
        assert_eq!(pred.y_tilde, rec.y_bar);
    }
}

#[test]
fn saddle_point_is_fixed_by_prediction() {
    let p = counterexample_problem();
    let params = SolverParams::new(1.0, 1.0, 0.5, StepRule::Optimal);
    let u = Iterate::zeros(1, 1);
    let pred = predict(&p, &params, &u).unwrap();
    assert_eq!((pred.x_tilde[0], pred.y_tilde[0]), (0.0, 0.0));
}

#[test]
fn alpha_one_correction_returns_predictor() {
    let a = common::gaussian_matrix(1, 3, 4);
    let params = SolverParams::new(1.0, 10.0, 1.0, StepRule::Manual);
    let u = Iterate::new(vec![1.0; 4], vec![2.0; 3]);
    let pred = genpd_core::certify::Predictor { x_tilde: vec![0.5; 4], y_tilde: vec![-1.0; 3] };
    let next = correct(&a, &u, &pred, &params).unwrap();
    assert_eq!((next.x, next.y), (pred.x_tilde.clone(), pred.y_tilde.clone()));
}

fn assignment_setup(n: usize, seed: u64, rule: StepRule) -> (AssignmentInstance, SolverParams, ViPoint) {
    let inst = AssignmentInstance::generate(n, seed).unwrap();
    let params = params_for(rule, n, 0.5).unwrap();
    let star = solve(&inst.problem(), &params.with_tol(1e-12), inst.start(), &mut []).unwrap();
    (inst, params, star.final_iterate.point())
}

#[test]
fn assignment_contraction_holds() {
    for rule in [StepRule::Classic, StepRule::Optimal] {
        let (inst, params, star) = assignment_setup(5, 2, rule);
        let a = materialize(&inst.operator()).unwrap();
        let certs = build_matrices(&a, params.r, params.s, params.alpha).unwrap();
        let traj = record_trajectory(&inst.problem(), &params, inst.start(), 120).unwrap();
        let rep = contraction_check(&traj, &star, &certs).unwrap();
        assert!(rep.metric_valid);
        assert_eq!(rep.violations(), 0, "{rule}: max violation {:e}", rep.max_violation);
        let mono = residual_monotonicity_check(&traj, &certs).unwrap();
        assert!(mono.holds());
    }
}

#[test]
fn counterexample_certificate_is_rejected() {
    let p = counterexample_problem();
    let params = SolverParams::new(0.7, 1.0, 1.0, StepRule::Manual);
    let traj = record_trajectory(&p, &params, Iterate::new(vec![1.0], vec![1.0]), 50).unwrap();
    let one = DenseMatrix::identity(1);
    let certs = build_matrices(&one, 0.7, 1.0, 1.0).unwrap();
    assert!(!is_positive_definite(&certs.g, 0.0).unwrap());
    let rep = contraction_check(&traj, &ViPoint::zeros(1, 1), &certs).unwrap();
    assert!(!rep.metric_valid);
    assert!(!rep.holds());
}

#[test]
fn recorder_and_streaming_monitor_agree() {
    let inst = BpInstance::generate(100, 4).unwrap();
    let rho = inst.rho().unwrap();
    let params = genpd_core::apps::bp::params_for_rho(rho, StepRule::Optimal, 0.5).unwrap();
    let u0 = Iterate::zeros(100, 25);
    let mut rec = TrajectoryRecorder::new(u0.clone());
    let mut res = ResidualMonitor::new(&params, &u0);
    let report = solve(&inst.problem(), &params, u0, &mut [&mut rec, &mut res]).unwrap();
    let traj = rec.finish();
    assert_eq!(traj.len(), report.iterations);
    let metric = OperatorMetric::new(&inst.a, params.r, params.s, params.alpha, rho);
    let mono = residual_monotonicity_check(&traj, &metric).unwrap();
    assert!(mono.holds(), "max violation {:e}", mono.max_violation);
    let scale = res.values[0];
    for (row, v) in mono.rows.iter().zip(&res.values) {
        assert!((row.rhs - v).abs() <= 1e-9 * scale);
    }
}

#[test]
fn ergodic_bound_on_assignment() {
    let (inst, params, _) = assignment_setup(5, 4, StepRule::Optimal);
    let problem = inst.problem();
    let a = materialize(&inst.operator()).unwrap();
    let certs = build_matrices(&a, params.r, params.s, params.alpha).unwrap();
    let traj = record_trajectory(&problem, &params, inst.start(), 101).unwrap();
    let u0 = inst.start().point();
    let mut g = Stream::new(4, streams::START);
    let probes: Vec<ViPoint> = (0..20)
        .map(|_| ViPoint::new((0..25).map(|_| g.unit()).collect(), common::gaussian_vec(&mut g, 10)))
        .collect();
    for n in [10, 100] {
        let acc = ErgodicAccumulator::from_trajectory(&traj, n + 1).unwrap();
        let rep = ergodic_gap_check(&acc, &problem, &probes, &u0, &certs).unwrap();
        assert!(rep.holds(), "N = {n}: {:e}", rep.max_violation);
        // probing at the average itself gives a zero left side
        let avg = acc.average().unwrap();
        let own = ergodic_gap_check(&acc, &problem, std::slice::from_ref(&avg), &u0, &certs).unwrap();
        assert!(own.rows[0].lhs.abs() < 1e-12);
        assert!(own.rows[0].rhs >= 0.0);
        assert!(theta(&problem, &avg).unwrap().is_finite());
    }
    let bad = vec![ViPoint::new(vec![2.0; 25], vec![0.0; 10])];
    let acc = ErgodicAccumulator::from_trajectory(&traj, 11).unwrap();
    assert!(ergodic_gap_check(&acc, &problem, &bad, &u0, &certs).is_err());
    assert!(certs.metric_valid());
}
