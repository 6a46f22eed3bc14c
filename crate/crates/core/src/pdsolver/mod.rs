//! The generalized primal-dual iteration and its driver.

mod params;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::math;
use crate::model::{SaddleProblem, ViPoint};

pub use params::{
    check_step_condition, improvement_factor, SolverParams, StepRule, StopMetric, Warning, BOUNDARY_RTOL,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Iterates whose sup-norm exceed this are classified as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// `u^k = (x^k, y^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
}

impl Iterate {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Iterate { x, y, k: 0 }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Iterate::new(vec![0.0; n], vec![0.0; m])
    }

    pub fn point(&self) -> ViPoint {
        ViPoint::new(self.x.clone(), self.y.clone())
    }

    pub fn norm_inf(&self) -> f64 {
        math::norm_inf(&self.x).max(math::norm_inf(&self.y))
    }

    pub fn is_finite(&self) -> bool {
        math::all_finite(&self.x) && math::all_finite(&self.y)
    }
}

/// The intermediate quantities of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub x_next: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub y_next: Vec<f64>,
    /// `A(x+ - x)`, taken from cached products.
    pub a_delta_x: Vec<f64>,
    /// `|u^k - u^{k+1}|` in the Euclidean norm.
    pub step_norm: f64,
}

/// Observer called after every step.
pub trait Monitor {
    fn observe(&mut self, iterate: &Iterate, record: &StepRecord);
}

impl<F: FnMut(&Iterate, &StepRecord)> Monitor for F {
    fn observe(&mut self, iterate: &Iterate, record: &StepRecord) {
        self(iterate, record)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIter,
    /// A non-finite entry or `|u|_inf > 1e12` appeared.
    Divergence,
}

/// One line of the optional per-iteration history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    pub step_norm: f64,
    pub objective: f64,
    pub constraint_violation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub final_iterate: Iterate,
    /// `f(x)` at the final iterate.
    pub objective: f64,
    /// `|Ax - b|` when the problem has an equality right-hand side.
    pub constraint_violation: Option<f64>,
    pub last_step_norm: f64,
    /// Value of the configured stopping metric at the last step.
    pub last_stop_measure: f64,
    pub history: Option<Vec<HistoryRow>>,
    pub warnings: Vec<Warning>,
}

impl SolveReport {
    pub fn diverged(&self) -> bool {
        self.stop_reason == StopReason::Divergence
    }
}

/// Output of the prediction half of a step, with the products it computed.
#[derive(Clone, Debug)]
pub(crate) struct Prediction {
    pub x_tilde: Vec<f64>,
    pub ax_tilde: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y_tilde: Vec<f64>,
}

/// Computes `x+`, `xbar`, `ybar` given `ax = A x`.
///
/// Performs one adjoint (`A'y`) and one forward (`A x+`) application; `A xbar`
/// is formed from `A x+` and the cached `A x`.
pub(crate) fn predict_cached<P: SaddleProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    x: &[f64],
    y: &[f64],
    ax: &[f64],
) -> Prediction {
    let map = problem.map();
    let (n, m) = (map.cols(), map.rows());
    let inv_r = 1.0 / params.r;
    let inv_s = 1.0 / params.s;
    let alpha = params.alpha;

    let mut v = vec![0.0; n];
    map.adjoint_into(y, &mut v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi = xi + inv_r * *vi;
    }
    let mut x_tilde = vec![0.0; n];
    problem.prox_primal(&v, inv_r, &mut x_tilde);

    let mut ax_tilde = vec![0.0; m];
    map.apply_into(&x_tilde, &mut ax_tilde);

    let x_bar: Vec<f64> = x_tilde.iter().zip(x).map(|(xt, xk)| xt + alpha * (xt - xk)).collect();
    let mut w = vec![0.0; m];
    for ((wi, yi), (at, ak)) in w.iter_mut().zip(y).zip(ax_tilde.iter().zip(ax)) {
        let ax_bar = at + alpha * (at - ak);
        *wi = yi - inv_s * ax_bar;
    }
    let mut y_tilde = vec![0.0; m];
    problem.prox_dual(&w, inv_s, &mut y_tilde);

    Prediction { x_tilde, ax_tilde, x_bar, y_tilde }
}

/// `y+ = ybar - (1 - alpha)/s * (A x+ - A x)`; also returns `A(x+ - x)`.
pub(crate) fn correct_dual(params: &SolverParams, y_tilde: &[f64], ax_tilde: &[f64], ax: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let c = (1.0 - params.alpha) / params.s;
    let a_delta_x: Vec<f64> = ax_tilde.iter().zip(ax).map(|(t, k)| t - k).collect();
    let y_next = y_tilde.iter().zip(&a_delta_x).map(|(yt, d)| yt - c * d).collect();
    (y_next, a_delta_x)
}

/// Iterate together with the cached product `A x`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub iterate: Iterate,
    ax: Vec<f64>,
}

impl SolverState {
    /// Costs one forward application.
    pub fn new<P: SaddleProblem + ?Sized>(problem: &P, iterate: Iterate) -> Result<Self> {
        check_len(problem.primal_dim(), iterate.x.len())?;
        check_len(problem.dual_dim(), iterate.y.len())?;
        let ax = problem.map().apply(&iterate.x)?;
        Ok(SolverState { iterate, ax })
    }

    /// `A x` at the current iterate.
    pub fn ax(&self) -> &[f64] {
        &self.ax
    }

    /// One step; exactly one forward and one adjoint application.
    pub fn advance<P: SaddleProblem + ?Sized>(&mut self, problem: &P, params: &SolverParams) -> StepRecord {
        let it = &self.iterate;
        let pred = predict_cached(problem, params, &it.x, &it.y, &self.ax);
        let (y_next, a_delta_x) = correct_dual(params, &pred.y_tilde, &pred.ax_tilde, &self.ax);
        let step_norm = math::sqrt(math::dist_sq(&pred.x_tilde, &it.x) + math::dist_sq(&y_next, &it.y));
        let record = StepRecord {
            x_next: pred.x_tilde,
            x_bar: pred.x_bar,
            y_bar: pred.y_tilde,
            y_next,
            a_delta_x,
            step_norm,
        };
        self.iterate = Iterate { x: record.x_next.clone(), y: record.y_next.clone(), k: it.k + 1 };
        self.ax = pred.ax_tilde;
        record
    }
}

/// One step of the generalized scheme from `current`.
pub fn step<P: SaddleProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    current: &Iterate,
) -> Result<(Iterate, StepRecord)> {
    let mut state = SolverState::new(problem, current.clone())?;
    let record = state.advance(problem, params);
    Ok((state.iterate, record))
}

fn stop_measure(metric: StopMetric, prev: &Iterate, record: &StepRecord) -> f64 {
    match metric {
        StopMetric::Euclidean => record.step_norm,
        StopMetric::MaxNorm => math::dist_inf(&record.x_next, &prev.x).max(math::dist_inf(&record.y_next, &prev.y)),
        StopMetric::DualAverage => {
            let m = record.y_next.len().max(1) as f64;
            math::sqrt(math::dist_sq(&record.y_next, &prev.y)) / m
        }
    }
}

fn violation<P: SaddleProblem + ?Sized>(problem: &P, ax: &[f64]) -> Option<f64> {
    problem
        .equality_rhs()
        .map(|b| math::sqrt(ax.iter().zip(b).map(|(a, bi)| (a - bi) * (a - bi)).sum()))
}

/// Runs steps from `u0` until the stopping metric drops below `params.tol`,
/// `params.max_iter` steps were taken, or the iterates blow up.
///
/// Monitors see every new iterate with the record of the step that
/// produced it.
pub fn solve<P: SaddleProblem + ?Sized>(
    problem: &P,
    params: &SolverParams,
    u0: Iterate,
    monitors: &mut [&mut dyn Monitor],
) -> Result<SolveReport> {
    let mut warnings = Vec::new();
    if let Some(w) = params.validate_basic()? {
        warnings.push(w);
    }
    check_len(problem.primal_dim(), u0.x.len())?;
    check_len(problem.dual_dim(), u0.y.len())?;
    if !problem.primal_feasible(&u0.x) || !problem.dual_feasible(&u0.y) {
        return Err(Error::Infeasible("starting point outside X x Y"));
    }

    let mut state = SolverState::new(problem, u0)?;
    let mut history = params.record_history.then(Vec::new);
    let mut stop_reason = StopReason::MaxIter;
    let mut last_step_norm = f64::NAN;
    let mut last_measure = f64::NAN;

    for _ in 0..params.max_iter {
        let prev = state.iterate.clone();
        let record = state.advance(problem, params);
        for m in monitors.iter_mut() {
            m.observe(&state.iterate, &record);
        }
        last_step_norm = record.step_norm;
        last_measure = stop_measure(params.stop, &prev, &record);

        if !state.iterate.is_finite() || state.iterate.norm_inf() > DIVERGENCE_THRESHOLD {
            stop_reason = StopReason::Divergence;
            break;
        }
        if let Some(h) = history.as_mut() {
            h.push(HistoryRow {
                k: state.iterate.k,
                step_norm: record.step_norm,
                objective: problem.theta_primal(&state.iterate.x),
                constraint_violation: violation(problem, &state.ax),
            });
        }
        if last_measure < params.tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }

    let objective = problem.theta_primal(&state.iterate.x);
    let constraint_violation = violation(problem, &state.ax);
    Ok(SolveReport {
        iterations: state.iterate.k,
        stop_reason,
        final_iterate: state.iterate,
        objective,
        constraint_violation,
        last_step_norm,
        last_stop_measure: last_measure,
        history,
        warnings,
    })
}
