//! The assignment problem `max { sum c_ij x_ij : x doubly stochastic }`,
//! solved as `min { -c'x : Ax = 1, 0 <= x <= 1 }`.
//!
//! `x_ij` is stored at `i * n + j`. The constraint operator maps `x` to its
//! row sums followed by its column sums; `A A' = [nI, ee'; ee', nI]`, so
//! `rho(A'A) = 2n` while the average eigenvalue is `2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linops::{spectral_radius_gram, LinearMap};
use crate::math;
use crate::model::{EqualityDual, LinearBox, Problem};
use crate::pdsolver::{
    improvement_factor, solve, Iterate, Monitor, SolveReport, SolverParams, StepRecord, StepRule, StopMetric,
};
use crate::rng::{streams, Stream};

/// Stopping tolerance on `max(|dx|_inf, |dy|_inf)`.
pub const ASSIGN_TOL: f64 = 1e-10;

/// Distance to `{0, 1}` below which a converged entry counts as binary.
pub const BINARY_TOL: f64 = 1e-6;

/// `x -> (row sums; column sums)` on `n x n` matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssignmentOperator {
    pub n: usize,
}

impl LinearMap for AssignmentOperator {
    fn rows(&self) -> usize {
        2 * self.n
    }

    fn cols(&self) -> usize {
        self.n * self.n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.fill(0.0);
        let (rows, cols) = out.split_at_mut(n);
        for i in 0..n {
            let row = &v[i * n..(i + 1) * n];
            rows[i] = row.iter().sum();
            for (c, x) in cols.iter_mut().zip(row) {
                *c += x;
            }
        }
    }

    fn adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (a, b) = w.split_at(n);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = a[i] + b[j];
            }
        }
    }
}

/// Closed-form spectral data of `A'A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralFacts {
    pub rho: f64,
    pub trace: f64,
    pub rho_average: f64,
}

pub fn spectral_facts(n: usize) -> Result<SpectralFacts> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive"));
    }
    let n = n as f64;
    Ok(SpectralFacts { rho: 2.0 * n, trace: 2.0 * n * n, rho_average: 2.0 })
}

/// Numerical values of the same quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCheck {
    /// Power-iteration estimate of `rho(A'A)`.
    pub rho: f64,
    /// `trace(A'A) = sum_k |A e_k|^2`.
    pub trace: f64,
}

/// Measures `rho` and the trace of `A'A` by power iteration and unit probes.
pub fn measure_spectral_facts(n: usize, seed: u64) -> Result<SpectralCheck> {
    let op = AssignmentOperator { n };
    let rho = spectral_radius_gram(&op, 1e-13, 100_000, seed)?.rho;
    let mut e = vec![0.0; n * n];
    let mut col = vec![0.0; 2 * n];
    let mut trace = 0.0;
    for k in 0..n * n {
        e[k] = 1.0;
        op.apply_into(&e, &mut col);
        trace += math::norm_sq(&col);
        e[k] = 0.0;
    }
    Ok(SpectralCheck { rho, trace })
}

/// Random costs `c_ij = 10 U(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentInstance {
    pub n: usize,
    pub costs: Vec<f64>,
    pub seed: u64,
}

impl AssignmentInstance {
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive"));
        }
        let mut g = Stream::new(seed, streams::COSTS);
        // 10 (1 - U) lies in (0, 10], keeping every cost strictly positive
        let costs = (0..n * n).map(|_| 10.0 * (1.0 - g.unit())).collect();
        Ok(AssignmentInstance { n, costs, seed })
    }

    pub fn from_costs(n: usize, costs: Vec<f64>) -> Result<Self> {
        crate::error::check_len(n * n, costs.len())?;
        if n == 0 || costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::InvalidArgument("costs must be finite and positive"));
        }
        Ok(AssignmentInstance { n, costs, seed: 0 })
    }

    pub fn operator(&self) -> AssignmentOperator {
        AssignmentOperator { n: self.n }
    }

    pub fn problem(&self) -> Problem<AssignmentOperator, LinearBox, EqualityDual> {
        let cost = self.costs.iter().map(|c| -c).collect();
        Problem::new(self.operator(), LinearBox { cost, lo: 0.0, hi: 1.0 }, EqualityDual { rhs: vec![1.0; 2 * self.n] })
    }

    /// `Phi(x) = sum c_ij x_ij`.
    pub fn phi(&self, x: &[f64]) -> f64 {
        math::dot(&self.costs, x)
    }

    /// `x_ij = 1/n`, `y = 0`.
    pub fn start(&self) -> Iterate {
        Iterate::new(vec![1.0 / self.n as f64; self.n * self.n], vec![0.0; 2 * self.n])
    }
}

fn base(r: f64, s: f64, alpha: f64, rule: StepRule) -> SolverParams {
    SolverParams::new(r, s, alpha, rule).with_tol(ASSIGN_TOL).with_stop_metric(StopMetric::MaxNorm)
}

/// `r = 10/n`, `s = 0.4 n`: `r s = 4 = 2 rho_average`, uncertified.
pub fn heuristic_params(n: usize) -> SolverParams {
    let n = n as f64;
    base(10.0 / n, 0.4 * n, 1.0, StepRule::Heuristic)
}

/// `r = (10/n) sqrt(n/2)`, `s = 0.4 n sqrt(n/2)`: `r s = 2n = rho`.
pub fn classic_params(n: usize) -> SolverParams {
    let scale = math::sqrt(n as f64 / 2.0);
    let n = n as f64;
    base(10.0 / n * scale, 0.4 * n * scale, 1.0, StepRule::Classic)
}

/// Classic values scaled by `sqrt(1 - alpha + alpha^2)` (`sqrt(0.75)` at `alpha = 1/2`).
pub fn improved_params(n: usize, alpha: f64) -> SolverParams {
    let c = classic_params(n);
    let k = math::sqrt(improvement_factor(alpha));
    let rule = if alpha == 0.5 { StepRule::Optimal } else { StepRule::Improved };
    base(c.r * k, c.s * k, alpha, rule)
}

pub fn params_for(rule: StepRule, n: usize, alpha: f64) -> Result<SolverParams> {
    let params = match rule {
        StepRule::Classic => classic_params(n),
        StepRule::Improved => improved_params(n, alpha),
        StepRule::Optimal => improved_params(n, 0.5),
        StepRule::Heuristic => heuristic_params(n),
        StepRule::Manual => return Err(Error::InvalidArgument("manual steps have no assignment recipe")),
    };
    params.validate(2.0 * n as f64)?;
    Ok(params)
}

/// Counts steps satisfying `r s |x^k - x^{k+1}|^2 > |A(x^k - x^{k+1})|^2`.
/// A zero step satisfies it by convention.
#[derive(Clone, Debug)]
pub struct LocalConditionMonitor {
    rs: f64,
    prev_x: Vec<f64>,
    pub satisfied: usize,
    pub total: usize,
}

impl LocalConditionMonitor {
    /// `x0` must be the starting primal point of the run.
    pub fn new(params: &SolverParams, x0: &[f64]) -> Self {
        LocalConditionMonitor { rs: params.r * params.s, prev_x: x0.to_vec(), satisfied: 0, total: 0 }
    }

    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.total as f64
        }
    }
}

impl Monitor for LocalConditionMonitor {
    fn observe(&mut self, iterate: &Iterate, record: &StepRecord) {
        let dx = math::dist_sq(&record.x_next, &self.prev_x);
        let adx = math::norm_sq(&record.a_delta_x);
        if (dx == 0.0 && adx == 0.0) || self.rs * dx > adx {
            self.satisfied += 1;
        }
        self.total += 1;
        self.prev_x.clone_from(&iterate.x);
    }
}

/// Outcome of [`solve_assignment`].
#[derive(Clone, Debug)]
pub struct AssignmentReport {
    pub params: SolverParams,
    pub solve: SolveReport,
    /// `Phi(x)` at termination.
    pub phi: f64,
    /// Largest `|row or column sum - 1|`.
    pub max_sum_defect: f64,
    /// Largest distance of an entry to `{0, 1}`.
    pub max_integrality_gap: f64,
    /// `perm[i] = j` when rounding `x` yields a permutation matrix.
    pub permutation: Option<Vec<usize>>,
    pub phi_rounded: Option<f64>,
    /// Fraction of steps satisfying the local step-size condition.
    pub local_condition: f64,
}

impl AssignmentReport {
    pub fn iterations(&self) -> usize {
        self.solve.iterations
    }

    pub fn is_binary(&self) -> bool {
        self.max_integrality_gap < BINARY_TOL && self.permutation.is_some()
    }
}

/// Rounds `x` and returns `perm[i] = j` if the result is a permutation matrix.
pub fn round_to_permutation(x: &[f64], n: usize) -> Option<Vec<usize>> {
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if math::round(x[i * n + j]) == 1.0 {
                if perm[i] != usize::MAX || col_used[j] {
                    return None;
                }
                perm[i] = j;
                col_used[j] = true;
            }
        }
    }
    perm.iter().all(|j| *j != usize::MAX).then_some(perm)
}

pub fn solve_with(instance: &AssignmentInstance, params: SolverParams) -> Result<AssignmentReport> {
    let problem = instance.problem();
    let u0 = instance.start();
    let mut local = LocalConditionMonitor::new(&params, &u0.x);
    let solve = solve(&problem, &params, u0, &mut [&mut local])?;
    if solve.diverged() {
        return Err(Error::Diverged { iterations: solve.iterations });
    }
    let n = instance.n;
    let x = &solve.final_iterate.x;
    let sums = instance.operator().apply(x)?;
    let max_sum_defect = sums.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let max_integrality_gap = x.iter().map(|v| (v - math::round(*v)).abs()).fold(0.0, f64::max);
    let permutation = round_to_permutation(x, n);
    let phi_rounded = permutation.as_ref().map(|p| p.iter().enumerate().map(|(i, j)| instance.costs[i * n + j]).sum());
    Ok(AssignmentReport {
        phi: instance.phi(x),
        params,
        max_sum_defect,
        max_integrality_gap,
        permutation,
        phi_rounded,
        local_condition: local.fraction(),
        solve,
    })
}

pub fn solve_assignment(instance: &AssignmentInstance, rule: StepRule, alpha: f64) -> Result<AssignmentReport> {
    solve_with(instance, params_for(rule, instance.n, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_all_ones() {
        let op = AssignmentOperator { n: 2 };
        assert_eq!(op.apply(&[1.0; 4]).unwrap(), vec![2.0; 4]);
        assert_eq!(op.adjoint(&[1.0, 2.0, 10.0, 20.0]).unwrap(), vec![11.0, 21.0, 12.0, 22.0]);
    }

    #[test]
    fn facts() {
        let f = spectral_facts(10).unwrap();
        assert_eq!((f.rho, f.trace, f.rho_average), (20.0, 200.0, 2.0));
        assert_eq!(spectral_facts(1).unwrap().rho, 2.0);
        let m = measure_spectral_facts(10, 1).unwrap();
        assert!((m.rho - 20.0).abs() < 1e-8);
        assert_eq!(m.trace, 200.0);
    }

    #[test]
    fn all_ones_eigenvector() {
        let op = AssignmentOperator { n: 7 };
        let aat = op.apply(&op.adjoint(&[1.0; 14]).unwrap()).unwrap();
        assert!(aat.iter().all(|v| *v == 14.0));
    }

    #[test]
    fn heuristic_recipe() {
        let p = heuristic_params(50);
        assert!((p.r - 0.2).abs() < 1e-15 && (p.s - 20.0).abs() < 1e-12);
        for n in [3, 10, 50, 200] {
            let p = heuristic_params(n);
            assert!((p.r * p.s / 2.0 - 2.0).abs() < 1e-12);
        }
        assert!(params_for(StepRule::Heuristic, 10, 1.0).is_ok());
    }

    #[test]
    fn classic_on_bound() {
        for n in [5, 20, 50] {
            let c = classic_params(n);
            assert!((c.r * c.s - 2.0 * n as f64).abs() < 1e-9);
            assert!(params_for(StepRule::Classic, n, 1.0).is_ok());
            assert!(params_for(StepRule::Optimal, n, 0.5).is_ok());
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(round_to_permutation(&[0.0, 1.0, 1.0, 0.0], 2), Some(vec![1, 0]));
        assert_eq!(round_to_permutation(&[1.0, 1.0, 0.0, 0.0], 2), None);
        assert_eq!(round_to_permutation(&[0.4, 0.4, 0.4, 0.4], 2), None);
    }

    #[test]
    fn zero_step_counts_as_satisfied() {
        let params = heuristic_params(2);
        let mut mon = LocalConditionMonitor::new(&params, &[0.5; 4]);
        let it = Iterate::new(vec![0.5; 4], vec![0.0; 4]);
        let rec = StepRecord {
            x_next: vec![0.5; 4],
            x_bar: vec![0.5; 4],
            y_bar: vec![0.0; 4],
            y_next: vec![0.0; 4],
            a_delta_x: vec![0.0; 4],
            step_norm: 0.0,
        };
        mon.observe(&it, &rec);
        assert_eq!(mon.fraction(), 1.0);
    }
}
