//! Basis pursuit `min { |x|_1 : Ax = b }`.
//!
//! The primal proximal map is soft thresholding and the dual update is
//! explicit, so every `alpha` produces the same iterates; `alpha` only
//! changes which step sizes the convergence condition admits.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linops::{spectral_radius_gram, DenseMatrix};
use crate::math;
use crate::model::{EqualityDual, Problem, ProxTerm};
use crate::pdsolver::{improvement_factor, solve, Iterate, SolveReport, SolverParams, StepRule};
use crate::rng::{streams, Stream};

/// Stopping tolerance on `|u^k - u^{k+1}|`.
pub const BP_TOL: f64 = 1e-9;

/// `sign(v) max(|v| - lambda, 0)` componentwise.
pub fn shrink(v: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    shrink_into(v, lambda, &mut out);
    out
}

pub fn shrink_into(v: &[f64], lambda: f64, out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        let mag = x.abs() - lambda;
        *o = if mag > 0.0 { mag.copysign(*x) } else { 0.0 };
    }
}

/// `h(x) = |x|_1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct L1Norm;

impl ProxTerm for L1Norm {
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        shrink_into(v, step, out)
    }

    fn value(&self, z: &[f64]) -> f64 {
        math::norm1(z)
    }
}

/// A random sparse recovery instance with `b = A x_true`.
#[derive(Clone, Debug)]
pub struct BpInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
    pub seed: u64,
}

impl BpInstance {
    /// `m = n/4` Gaussian rows, `n/20` nonzeros uniform on `[-10, 10]` at
    /// positions given by the first entries of a shuffled `0..n`.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        if n < 20 {
            return Err(Error::InvalidArgument("basis pursuit needs n >= 20"));
        }
        let (m, k) = (n / 4, n / 20);
        let mut g = Stream::new(seed, streams::MATRIX);
        let a = DenseMatrix::from_fn(m, n, |_, _| g.gaussian());

        let mut idx: Vec<usize> = (0..n).collect();
        Stream::new(seed, streams::SUPPORT).shuffle(&mut idx);
        let mut vals = Stream::new(seed, streams::VALUES);
        let mut x_true = vec![0.0; n];
        for &i in &idx[..k] {
            x_true[i] = vals.uniform(-10.0, 10.0);
        }
        let b = a.mul_vec(&x_true);
        Ok(BpInstance { a, b, x_true, seed })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn problem(&self) -> Problem<&DenseMatrix, L1Norm, EqualityDual> {
        Problem::new(&self.a, L1Norm, EqualityDual { rhs: self.b.clone() })
    }

    /// `rho(A'A)` by power iteration.
    pub fn rho(&self) -> Result<f64> {
        let est = spectral_radius_gram(&self.a, 1e-12, 100_000, self.seed)?;
        Ok(est.rho)
    }
}

/// `r = sqrt(c rho)/10`, `s = 10 sqrt(c rho)` with `c = 1` (classic),
/// `1 - alpha + alpha^2` (improved) or `0.75` (optimal, `alpha = 1/2`).
pub fn params_for_rho(rho: f64, rule: StepRule, alpha: f64) -> Result<SolverParams> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument("rho must be positive"));
    }
    let (scale, alpha) = match rule {
        StepRule::Classic => (1.0, 1.0),
        StepRule::Improved => (improvement_factor(alpha), alpha),
        StepRule::Optimal => (0.75, 0.5),
        _ => return Err(Error::InvalidArgument("basis pursuit supports classic, improved and optimal")),
    };
    let root = math::sqrt(scale * rho);
    let params = SolverParams::new(root / 10.0, 10.0 * root, alpha, rule).with_tol(BP_TOL);
    params.validate(rho)?;
    Ok(params)
}

pub fn make_params(instance: &BpInstance, rule: StepRule, alpha: f64) -> Result<SolverParams> {
    params_for_rho(instance.rho()?, rule, alpha)
}

/// Outcome of one basis pursuit solve.
#[derive(Clone, Debug)]
pub struct BpReport {
    pub params: SolverParams,
    pub solve: SolveReport,
    /// `|x|_1` at termination.
    pub l1: f64,
    /// `|Ax - b|` at termination.
    pub violation: f64,
}

impl BpReport {
    pub fn iterations(&self) -> usize {
        self.solve.iterations
    }

    pub fn x(&self) -> &[f64] {
        &self.solve.final_iterate.x
    }
}

/// Solves from `u0 = 0` with the given parameters.
pub fn solve_with(instance: &BpInstance, params: SolverParams) -> Result<BpReport> {
    let problem = instance.problem();
    let solve = solve(&problem, &params, Iterate::zeros(instance.n(), instance.m()), &mut [])?;
    if solve.diverged() {
        return Err(Error::Diverged { iterations: solve.iterations });
    }
    let l1 = solve.objective;
    let violation = solve.constraint_violation.unwrap_or(f64::NAN);
    Ok(BpReport { params, solve, l1, violation })
}

pub fn solve_bp(instance: &BpInstance, rule: StepRule, alpha: f64) -> Result<BpReport> {
    solve_with(instance, make_params(instance, rule, alpha)?)
}

/// One point of an `alpha` sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub iterations: usize,
    pub objective: f64,
    pub violation: f64,
}

/// Iteration counts under the improved rule over a grid of `alpha`.
pub fn alpha_sweep(instance: &BpInstance, alphas: &[f64]) -> Result<Vec<SweepPoint>> {
    let rho = instance.rho()?;
    alphas
        .iter()
        .map(|&alpha| {
            let rep = solve_with(instance, params_for_rho(rho, StepRule::Improved, alpha)?)?;
            Ok(SweepPoint { alpha, iterations: rep.iterations(), objective: rep.l1, violation: rep.violation })
        })
        .collect()
}

/// `0, 0.1, ..., 1`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
