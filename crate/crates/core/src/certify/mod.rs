//! Convergence certificates for the generalized scheme.
//!
//! The step is rewritten as a prediction `u~ = (x+, ybar)` followed by the
//! correction `u+ = u - M(u - u~)`. With `H = Q M^-1` and
//! `G = Q' + Q - M'HM`, every run whose `H` and `G` are positive
//! (semi)definite satisfies
//!
//! ```text
//!     |u+ - u*|_H^2 <= |u - u*|_H^2 - |u - u~|_G^2
//! ```
//!
//! and the checks below test this and its consequences on recorded runs.

mod matrices;
mod metric;

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::math;
use crate::model::{monotone_map, theta, SaddleProblem, ViPoint};
use crate::pdsolver::{self, Iterate, Monitor, SolverParams, SolverState, StepRecord};

pub use matrices::{build_matrices, is_positive_definite, min_eigenvalue, CertificateMatrices, CERT_SIZE_CAP, CLOSED_FORM_TOL};
pub use metric::{CertificateMetric, OperatorMetric, METRIC_RTOL};

/// Relative slack of the contraction check.
pub const CONTRACTION_SLACK: f64 = 1e-8;
/// Relative slack of the residual monotonicity check.
pub const MONOTONICITY_SLACK: f64 = 1e-10;
/// Additive slack of the ergodic gap check.
pub const ERGODIC_SLACK: f64 = 1e-8;

/// `u~^k = (x+, ybar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    pub x_tilde: Vec<f64>,
    pub y_tilde: Vec<f64>,
}

impl Predictor {
    pub fn point(&self) -> ViPoint {
        ViPoint::new(self.x_tilde.clone(), self.y_tilde.clone())
    }

    pub fn from_record(record: &StepRecord) -> Self {
        Predictor { x_tilde: record.x_next.clone(), y_tilde: record.y_bar.clone() }
    }
}

/// Prediction half of a step from `current`.
pub fn predict<P: SaddleProblem + ?Sized>(problem: &P, params: &SolverParams, current: &Iterate) -> Result<Predictor> {
    check_len(problem.primal_dim(), current.x.len())?;
    check_len(problem.dual_dim(), current.y.len())?;
    let ax = problem.map().apply(&current.x)?;
    let p = pdsolver::predict_cached(problem, params, &current.x, &current.y, &ax);
    Ok(Predictor { x_tilde: p.x_tilde, y_tilde: p.y_tilde })
}

/// `u^{k+1} = u^k - M(u^k - u~^k)` without forming `M`:
/// `x^{k+1} = x~`, `y^{k+1} = y~ - (1 - alpha)/s A(x~ - x^k)`.
pub fn correct<M: LinearMap + ?Sized>(
    map: &M,
    current: &Iterate,
    predictor: &Predictor,
    params: &SolverParams,
) -> Result<Iterate> {
    check_len(map.cols(), current.x.len())?;
    check_len(map.cols(), predictor.x_tilde.len())?;
    check_len(map.rows(), current.y.len())?;
    check_len(map.rows(), predictor.y_tilde.len())?;
    // A x~ - A x^k, the same arithmetic as the direct step
    let ax_tilde = map.apply(&predictor.x_tilde)?;
    let ax = map.apply(&current.x)?;
    let (y_next, _) = pdsolver::correct_dual(params, &predictor.y_tilde, &ax_tilde, &ax);
    Ok(Iterate { x: predictor.x_tilde.clone(), y: y_next, k: current.k + 1 })
}

/// A recorded run: `pairs[k] = (u^k, u~^k)` and `last = u^K`.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub pairs: Vec<(Iterate, Predictor)>,
    pub last: Option<Iterate>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `u^{k+1}` for `k < len()`.
    pub fn next_of(&self, k: usize) -> Option<&Iterate> {
        if k + 1 < self.pairs.len() {
            Some(&self.pairs[k + 1].0)
        } else if k + 1 == self.pairs.len() {
            self.last.as_ref()
        } else {
            None
        }
    }

    /// A trajectory that sits at `u` forever.
    pub fn stationary(u: &ViPoint, steps: usize) -> Self {
        let it = |k| Iterate { x: u.x.clone(), y: u.y.clone(), k };
        let pred = Predictor { x_tilde: u.x.clone(), y_tilde: u.y.clone() };
        Trajectory { pairs: (0..steps).map(|k| (it(k), pred.clone())).collect(), last: Some(it(steps)) }
    }
}

/// Monitor that records `(u^k, u~^k)` pairs during [`pdsolver::solve`].
#[derive(Clone, Debug)]
pub struct TrajectoryRecorder {
    current: Iterate,
    traj: Trajectory,
}

impl TrajectoryRecorder {
    /// `start` must be the `u0` handed to the solver.
    pub fn new(start: Iterate) -> Self {
        TrajectoryRecorder { current: start, traj: Trajectory::default() }
    }

    pub fn finish(mut self) -> Trajectory {
        self.traj.last = Some(self.current);
        self.traj
    }
}

impl Monitor for TrajectoryRecorder {
    fn observe(&mut self, iterate: &Iterate, record: &StepRecord) {
        let prev = core::mem::replace(&mut self.current, iterate.clone());
        self.traj.pairs.push((prev, Predictor::from_record(record)));
    }
}

/// Runs exactly `steps` iterations from `u0` (no stopping test) and records them.
pub fn record_trajectory<P: SaddleProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    u0: Iterate,
    steps: usize,
) -> Result<Trajectory> {
    let mut state = SolverState::new(problem, u0)?;
    let mut pairs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let prev = state.iterate.clone();
        let rec = state.advance(problem, params);
        pairs.push((prev, Predictor::from_record(&rec)));
    }
    Ok(Trajectory { pairs, last: Some(state.iterate) })
}

/// One line of a certificate report; the inequality checked is `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive values violate the inequality.
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub rows: Vec<CertificateRow>,
    pub slack: f64,
    pub max_violation: f64,
    /// Whether `H` and `G` are positive semidefinite. When false the
    /// inequalities say nothing about convergence even if they hold.
    pub metric_valid: bool,
}

impl CertificateReport {
    fn from_rows(rows: Vec<CertificateRow>, slack: f64, metric_valid: bool) -> Self {
        let max_violation = rows.iter().map(|r| r.violation).fold(f64::NEG_INFINITY, f64::max);
        CertificateReport { rows, slack, max_violation, metric_valid }
    }

    /// Rows whose violation exceeds the slack.
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !(r.violation <= self.slack)).count()
    }

    /// No row exceeds the slack and the metric is valid.
    pub fn holds(&self) -> bool {
        self.metric_valid && self.violations() == 0
    }
}

fn diff(a: &Iterate, b: &ViPoint) -> ViPoint {
    ViPoint::new(
        a.x.iter().zip(&b.x).map(|(p, q)| p - q).collect(),
        a.y.iter().zip(&b.y).map(|(p, q)| p - q).collect(),
    )
}

fn residual(u: &Iterate, pred: &Predictor) -> ViPoint {
    diff(u, &pred.point())
}

/// Checks `|u^{k+1} - u*|_H^2 <= |u^k - u*|_H^2 - |u^k - u~^k|_G^2 + slack`
/// for every recorded step, with `slack = 1e-8 (1 + |u^0 - u*|_H^2)`.
pub fn contraction_check<C: CertificateMetric + ?Sized>(
    traj: &Trajectory,
    u_star: &ViPoint,
    metric: &C,
) -> Result<CertificateReport> {
    if traj.is_empty() {
        return Err(Error::Empty);
    }
    check_len(u_star.x.len(), traj.pairs[0].0.x.len())?;
    check_len(u_star.y.len(), traj.pairs[0].0.y.len())?;
    let d0 = metric.h_norm_sq(&diff(&traj.pairs[0].0, u_star));
    let slack = CONTRACTION_SLACK * (1.0 + d0);
    let mut rows = Vec::with_capacity(traj.len());
    let mut dk = d0;
    for (k, (u, pred)) in traj.pairs.iter().enumerate() {
        let next = traj.next_of(k).ok_or(Error::MissingData("trajectory lacks its final iterate"))?;
        let lhs = metric.h_norm_sq(&diff(next, u_star));
        let rhs = dk - metric.g_norm_sq(&residual(u, pred));
        rows.push(CertificateRow { k, lhs, rhs, violation: lhs - rhs });
        dk = lhs;
    }
    Ok(CertificateReport::from_rows(rows, slack, metric.metric_valid()))
}

/// `v_k = |M(u^k - u~^k)|_H^2` along the trajectory.
pub fn residual_sequence<C: CertificateMetric + ?Sized>(traj: &Trajectory, metric: &C) -> Vec<f64> {
    traj.pairs.iter().map(|(u, p)| metric.h_norm_sq(&metric.apply_m(&residual(u, p)))).collect()
}

/// Checks `v_{k+1} <= v_k + 1e-10 v_0` with `v_k = |M(u^k - u~^k)|_H^2`.
pub fn residual_monotonicity_check<C: CertificateMetric + ?Sized>(
    traj: &Trajectory,
    metric: &C,
) -> Result<CertificateReport> {
    monotonicity_report(&residual_sequence(traj, metric), metric.metric_valid())
}

/// The monotonicity check on an already computed residual sequence.
pub fn monotonicity_report(values: &[f64], metric_valid: bool) -> Result<CertificateReport> {
    let first = *values.first().ok_or(Error::Empty)?;
    let slack = MONOTONICITY_SLACK * first;
    let rows = values
        .windows(2)
        .enumerate()
        .map(|(k, w)| CertificateRow { k, lhs: w[1], rhs: w[0], violation: w[1] - w[0] })
        .collect();
    Ok(CertificateReport::from_rows(rows, slack, metric_valid))
}

/// Collects `v_k = |u^k - u^{k+1}|_H^2`, which equals `|M(u^k - u~^k)|_H^2`,
/// during a run. Uses the cached `A(x+ - x)` of each step, so it costs no
/// operator applications.
#[derive(Clone, Debug)]
pub struct ResidualMonitor {
    r: f64,
    s: f64,
    weight: f64,
    prev_x: Vec<f64>,
    prev_y: Vec<f64>,
    pub values: Vec<f64>,
}

impl ResidualMonitor {
    /// `start` must be the `u0` handed to the solver.
    pub fn new(params: &SolverParams, start: &Iterate) -> Self {
        ResidualMonitor {
            r: params.r,
            s: params.s,
            weight: (1.0 - params.alpha) / params.s,
            prev_x: start.x.clone(),
            prev_y: start.y.clone(),
            values: Vec::new(),
        }
    }
}

impl Monitor for ResidualMonitor {
    fn observe(&mut self, iterate: &Iterate, record: &StepRecord) {
        let dx = math::dist_sq(&iterate.x, &self.prev_x);
        let dy = math::dist_sq(&iterate.y, &self.prev_y);
        let adx = &record.a_delta_x;
        let cross: f64 = iterate.y.iter().zip(&self.prev_y).zip(adx).map(|((a, b), d)| (a - b) * d).sum();
        self.values.push(self.r * dx + self.weight * math::norm_sq(adx) + 2.0 * cross + self.s * dy);
        self.prev_x.clone_from(&iterate.x);
        self.prev_y.clone_from(&iterate.y);
    }
}

/// Result of the `O(1/N)` check on the residual sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub pilot: usize,
    /// `C = (pilot + 1) v_pilot`.
    pub constant: f64,
    /// `(N, v_N, C / (N + 1))` per checkpoint.
    pub rows: Vec<(usize, f64, f64)>,
}

impl RateReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|&(_, v, bound)| v <= bound)
    }
}

/// Fits `C` at `pilot` and checks `v_N <= C / (N + 1)` at each checkpoint.
pub fn rate_check(residuals: &[f64], pilot: usize, checkpoints: &[usize]) -> Result<RateReport> {
    let last = checkpoints.iter().copied().max().unwrap_or(0).max(pilot);
    if residuals.len() <= last {
        return Err(Error::DimensionMismatch { expected: last + 1, found: residuals.len() });
    }
    let constant = (pilot as f64 + 1.0) * residuals[pilot];
    let rows = checkpoints.iter().map(|&n| (n, residuals[n], constant / (n as f64 + 1.0))).collect();
    Ok(RateReport { pilot, constant, rows })
}

/// Running sum of the predictors `u~^0, ..., u~^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicAccumulator {
    pub running_sum: ViPoint,
    /// `N + 1`.
    pub count: usize,
}

impl ErgodicAccumulator {
    pub fn new(n: usize, m: usize) -> Self {
        ErgodicAccumulator { running_sum: ViPoint::zeros(n, m), count: 0 }
    }

    pub fn push(&mut self, pred: &Predictor) {
        for (s, v) in self.running_sum.x.iter_mut().zip(&pred.x_tilde) {
            *s += v;
        }
        for (s, v) in self.running_sum.y.iter_mut().zip(&pred.y_tilde) {
            *s += v;
        }
        self.count += 1;
    }

    /// Accumulates the first `count` predictors of a trajectory.
    pub fn from_trajectory(traj: &Trajectory, count: usize) -> Result<Self> {
        let first = traj.pairs.first().ok_or(Error::Empty)?;
        if count == 0 || count > traj.len() {
            return Err(Error::InvalidArgument("count must be in 1..=trajectory length"));
        }
        let mut acc = ErgodicAccumulator::new(first.1.x_tilde.len(), first.1.y_tilde.len());
        for (_, p) in &traj.pairs[..count] {
            acc.push(p);
        }
        Ok(acc)
    }

    /// `ubar_N`.
    pub fn average(&self) -> Result<ViPoint> {
        if self.count == 0 {
            return Err(Error::Empty);
        }
        let c = 1.0 / self.count as f64;
        Ok(ViPoint::new(
            self.running_sum.x.iter().map(|v| v * c).collect(),
            self.running_sum.y.iter().map(|v| v * c).collect(),
        ))
    }
}

/// `|u - u0|_H^2 / (2 (N + 1))`.
pub fn ergodic_bound<C: CertificateMetric + ?Sized>(metric: &C, probe: &ViPoint, u0: &ViPoint, count: usize) -> f64 {
    metric.h_norm_sq(&probe.sub(u0)) / (2.0 * count as f64)
}

/// Checks `theta(ubar) - theta(u) + <ubar - u, F(u)> <= |u - u0|_H^2 / (2(N+1)) + 1e-8`
/// for each probe `u`. Row `k` refers to `probes[k]`.
pub fn ergodic_gap_check<P: SaddleProblem + ?Sized, C: CertificateMetric + ?Sized>(
    acc: &ErgodicAccumulator,
    problem: &P,
    probes: &[ViPoint],
    u0: &ViPoint,
    metric: &C,
) -> Result<CertificateReport> {
    let avg = acc.average()?;
    let theta_avg = theta(problem, &avg)?;
    let mut rows = Vec::with_capacity(probes.len());
    for (k, u) in probes.iter().enumerate() {
        if !problem.primal_feasible(&u.x) || !problem.dual_feasible(&u.y) {
            return Err(Error::Infeasible("probe outside X x Y"));
        }
        let f = monotone_map(problem, u)?;
        let lhs = theta_avg - theta(problem, u)? + avg.sub(u).dot(&f);
        let rhs = ergodic_bound(metric, u, u0, acc.count);
        rows.push(CertificateRow { k, lhs, rhs, violation: lhs - rhs });
    }
    Ok(CertificateReport::from_rows(rows, ERGODIC_SLACK, metric.metric_valid()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::counterexample_problem;
    use crate::linops::{DenseMatrix, DiagonalMap};
    use crate::pdsolver::StepRule;
    use crate::rng::{streams, Stream};
    use alloc::vec;

    fn random_a(seed: u64, m: usize, n: usize) -> DenseMatrix {
        let mut g = Stream::new(seed, streams::MATRIX);
        DenseMatrix::from_fn(m, n, |_, _| g.gaussian())
    }

    #[test]
    fn scalar_h_examples() {
        let a = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let c = build_matrices(&a, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(c.h.data(), &[1.0, 1.0, 1.0, 1.0]);
        assert!(!is_positive_definite(&c.h, 1e-12).unwrap());
        let c = build_matrices(&a, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(c.h.data(), &[2.0, 1.0, 1.0, 1.0]);
        assert!(is_positive_definite(&c.h, 0.0).unwrap());
    }

    #[test]
    fn alpha_one_gives_identity_m() {
        let a = random_a(3, 3, 2);
        let c = build_matrices(&a, 2.0, 3.0, 1.0).unwrap();
        assert_eq!(c.m.max_abs_diff(&DenseMatrix::identity(5)), 0.0);
        assert!(c.h.max_abs_diff(&c.q) < 1e-15);
    }

    #[test]
    fn size_cap() {
        let a = DenseMatrix::zeros(1000, 1001);
        assert!(matches!(build_matrices(&a, 1.0, 1.0, 0.5), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn identity_is_pd_and_asymmetric_rejected() {
        assert!(is_positive_definite(&DenseMatrix::identity(4), 0.0).unwrap());
        let s = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(is_positive_definite(&s, 0.0).is_err());
    }

    #[test]
    fn predict_matches_hand_values_and_step() {
        let p = counterexample_problem();
        let params = SolverParams::new(1.0, 1.0, 1.0, StepRule::Manual);
        let u = Iterate::new(vec![1.0], vec![1.0]);
        let pred = predict(&p, &params, &u).unwrap();
        assert_eq!((pred.x_tilde[0], pred.y_tilde[0]), (2.0, -2.0));
        let next = correct(p.map(), &u, &pred, &params).unwrap();
        let (direct, _) = pdsolver::step(&p, &params, &u).unwrap();
        assert_eq!(next, direct);
    }

    #[test]
    fn stationary_trajectory_holds_with_equality() {
        let a = DiagonalMap::scalar(1.0);
        let metric = OperatorMetric::new(&a, 2.0, 1.0, 0.5, 1.0);
        let u = ViPoint::new(vec![0.3], vec![-0.2]);
        let t = Trajectory::stationary(&u, 5);
        let rep = contraction_check(&t, &u, &metric).unwrap();
        assert!(rep.rows.iter().all(|r| r.lhs == 0.0 && r.rhs == 0.0));
        assert!(rep.holds());
        let mono = residual_monotonicity_check(&t, &metric).unwrap();
        assert!(mono.rows.iter().all(|r| r.violation == 0.0));
    }

    #[test]
    fn dense_and_operator_metrics_agree() {
        let a = random_a(8, 3, 4);
        let (r, s, alpha) = (1.3, 2.1, 0.4);
        let dense = build_matrices(&a, r, s, alpha).unwrap();
        let op = OperatorMetric::new(&a, r, s, alpha, 1.0);
        let mut g = Stream::new(9, streams::START);
        for _ in 0..10 {
            let d = ViPoint::new((0..4).map(|_| g.gaussian()).collect(), (0..3).map(|_| g.gaussian()).collect());
            let (h1, h2) = (dense.h_norm_sq(&d), op.h_norm_sq(&d));
            let (g1, g2) = (dense.g_norm_sq(&d), op.g_norm_sq(&d));
            assert!((h1 - h2).abs() <= 1e-12 * (1.0 + h1.abs()));
            assert!((g1 - g2).abs() <= 1e-12 * (1.0 + g1.abs()));
            let m1 = dense.apply_m(&d);
            let m2 = op.apply_m(&d);
            assert!(m1.sub(&m2).norm() < 1e-13);
        }
    }

    #[test]
    fn counterexample_r07_metric_invalid() {
        let p = counterexample_problem();
        let params = SolverParams::new(0.7, 1.0, 1.0, StepRule::Manual);
        let traj = record_trajectory(&p, &params, Iterate::new(vec![1.0], vec![1.0]), 20).unwrap();
        let a = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let certs = build_matrices(&a, 0.7, 1.0, 1.0).unwrap();
        let rep = contraction_check(&traj, &ViPoint::zeros(1, 1), &certs).unwrap();
        assert!(!rep.metric_valid);
        assert!(!rep.holds());
    }

    #[test]
    fn ergodic_bound_halves() {
        let a = DiagonalMap::identity(2);
        let metric = OperatorMetric::new(&a, 2.0, 1.0, 0.5, 1.0);
        let probe = ViPoint::new(vec![1.0, 2.0], vec![0.5, -1.0]);
        let u0 = ViPoint::zeros(2, 2);
        for n in [1usize, 10, 100] {
            let b1 = ergodic_bound(&metric, &probe, &u0, n + 1);
            let b2 = ergodic_bound(&metric, &probe, &u0, 2 * n + 2);
            assert!((b2 / b1 - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn streaming_residuals_match_trajectory() {
        let a = random_a(4, 3, 5);
        let rho = crate::linops::eigen::gram_spectral_radius(&a).unwrap();
        let p = crate::model::Problem::linear_equality(&a, crate::model::HalfSquaredNorm, vec![1.0, -1.0, 0.5]).unwrap();
        let params = SolverParams::new(1.0, 0.8 * rho, 0.3, StepRule::Improved).with_max_iter(40).with_tol(1e-300);
        let u0 = Iterate::zeros(5, 3);
        let mut rec = TrajectoryRecorder::new(u0.clone());
        let mut res = ResidualMonitor::new(&params, &u0);
        pdsolver::solve(&p, &params, u0, &mut [&mut rec, &mut res]).unwrap();
        let traj = rec.finish();
        let certs = build_matrices(&a, params.r, params.s, params.alpha).unwrap();
        let direct = residual_sequence(&traj, &certs);
        assert_eq!(direct.len(), res.values.len());
        for (a, b) in direct.iter().zip(&res.values) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
        assert!(residual_monotonicity_check(&traj, &certs).unwrap().holds());
    }

    #[test]
    fn rate_check_needs_length() {
        assert!(rate_check(&[1.0; 50], 10, &[50]).is_err());
        let v: Vec<f64> = (0..101).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let rep = rate_check(&v, 10, &[50, 100]).unwrap();
        assert!(rep.holds());
    }
}
