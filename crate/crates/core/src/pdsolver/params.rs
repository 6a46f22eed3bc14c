use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Relative slack granted when `r s` sits exactly on a rule's bound.
///
/// The parameter recipes in the applications choose `r s` equal to
/// `factor * rho` with `rho` itself an estimate, so equality up to rounding
/// is accepted.
pub const BOUNDARY_RTOL: f64 = 1e-9;

/// How `r` and `s` were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepRule {
    /// `r s > rho(A'A)`.
    Classic,
    /// `r s > (1 - alpha + alpha^2) rho(A'A)`.
    Improved,
    /// `alpha = 1/2` and `r s > 0.75 rho(A'A)`.
    Optimal,
    /// Structure-based choice with no convergence guarantee.
    Heuristic,
    /// User supplied `r`, `s`; nothing is checked.
    Manual,
}

impl StepRule {
    pub const ALL: [StepRule; 5] =
        [StepRule::Classic, StepRule::Improved, StepRule::Optimal, StepRule::Heuristic, StepRule::Manual];

    pub fn name(self) -> &'static str {
        match self {
            StepRule::Classic => "classic",
            StepRule::Improved => "improved",
            StepRule::Optimal => "optimal",
            StepRule::Heuristic => "heuristic",
            StepRule::Manual => "manual",
        }
    }

    /// Whether convergence is guaranteed when the rule's bound holds.
    pub fn is_certified(self) -> bool {
        matches!(self, StepRule::Classic | StepRule::Improved | StepRule::Optimal)
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StepRule::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(Error::InvalidArgument("unknown step rule"))
    }
}

/// Quantity compared against `tol` after every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopMetric {
    /// `sqrt(|x+ - x|^2 + |y+ - y|^2)`.
    Euclidean,
    /// `max(|x+ - x|_inf, |y+ - y|_inf)`.
    MaxNorm,
    /// `|y+ - y| / m`, the average dual error.
    DualAverage,
}

/// `1 - alpha + alpha^2`.
pub fn improvement_factor(alpha: f64) -> f64 {
    1.0 - alpha + alpha * alpha
}

/// `r s > (1 - alpha + alpha^2) rho`.
pub fn check_step_condition(r: f64, s: f64, alpha: f64, rho: f64) -> Result<bool> {
    if !(r > 0.0 && s > 0.0 && rho > 0.0) {
        return Err(Error::InvalidArgument("r, s and rho must be positive"));
    }
    Ok(r * s > improvement_factor(alpha) * rho)
}

/// Recorded instead of a guarantee for uncertified rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Warning {
    Uncertified(StepRule),
    AlphaOutsideUnitInterval(f64),
}

/// Tuning record of one solver run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    /// Primal proximal weight; the primal step is `1/r`.
    pub r: f64,
    /// Dual proximal weight; the dual step is `1/s`.
    pub s: f64,
    /// Extrapolation parameter.
    pub alpha: f64,
    pub rule: StepRule,
    pub tol: f64,
    pub max_iter: usize,
    pub stop: StopMetric,
    /// Keep one [`super::HistoryRow`] per iteration in the report.
    pub record_history: bool,
}

impl SolverParams {
    pub fn new(r: f64, s: f64, alpha: f64, rule: StepRule) -> Self {
        SolverParams {
            r,
            s,
            alpha,
            rule,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            stop: StopMetric::Euclidean,
            record_history: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_metric(mut self, stop: StopMetric) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_history(mut self, on: bool) -> Self {
        self.record_history = on;
        self
    }

    /// The constant `c` in the rule's bound `r s > c rho`, if it has one.
    pub fn condition_factor(&self) -> Option<f64> {
        match self.rule {
            StepRule::Classic => Some(1.0),
            StepRule::Improved => Some(improvement_factor(self.alpha)),
            StepRule::Optimal => Some(0.75),
            StepRule::Heuristic | StepRule::Manual => None,
        }
    }

    /// Checks everything that does not need `rho(A'A)`.
    pub fn validate_basic(&self) -> Result<Option<Warning>> {
        if !(self.r > 0.0 && self.r.is_finite() && self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidArgument("r and s must be positive and finite"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha must be finite"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            if self.rule != StepRule::Manual {
                return Err(Error::InvalidArgument("alpha outside [0, 1] is only accepted with the manual rule"));
            }
            return Ok(Some(Warning::AlphaOutsideUnitInterval(self.alpha)));
        }
        if self.rule == StepRule::Optimal && self.alpha != 0.5 {
            return Err(Error::InvalidArgument("the optimal rule requires alpha = 1/2"));
        }
        if !self.rule.is_certified() {
            return Ok(Some(Warning::Uncertified(self.rule)));
        }
        Ok(None)
    }

    /// Checks the rule's bound against `rho = rho(A'A)`.
    ///
    /// Heuristic and manual runs pass with a warning.
    pub fn validate(&self, rho: f64) -> Result<Option<Warning>> {
        let warning = self.validate_basic()?;
        if !(rho >= 0.0) {
            return Err(Error::InvalidArgument("rho must be nonnegative"));
        }
        if let Some(c) = self.condition_factor() {
            let product = self.r * self.s;
            let bound = c * rho;
            if product < bound * (1.0 - BOUNDARY_RTOL) {
                return Err(Error::ConditionViolated { product, bound });
            }
        }
        Ok(warning)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_condition_examples() {
        assert!(check_step_condition(1.0, 1.0, 1.0, 0.999).unwrap());
        assert!(check_step_condition(0.76, 1.0, 0.5, 1.0).unwrap());
        assert!(!check_step_condition(0.74, 1.0, 0.5, 1.0).unwrap());
        assert!(!check_step_condition(0.7, 1.0, 1.0, 1.0).unwrap());
        assert!(check_step_condition(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(check_step_condition(1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("Optimal".parse::<StepRule>().unwrap(), StepRule::Optimal);
        assert!("fast".parse::<StepRule>().is_err());
    }

    #[test]
    fn validation_per_rule() {
        let rho = 4.0;
        assert!(SolverParams::new(1.0, 4.0, 1.0, StepRule::Classic).validate(rho).unwrap().is_none());
        assert!(SolverParams::new(1.0, 3.9, 1.0, StepRule::Classic).validate(rho).is_err());
        assert!(SolverParams::new(1.0, 3.1, 0.5, StepRule::Optimal).validate(rho).is_ok());
        assert!(SolverParams::new(1.0, 3.1, 0.4, StepRule::Optimal).validate(rho).is_err());
        assert!(SolverParams::new(1.0, 3.3, 0.25, StepRule::Improved).validate(rho).is_ok());
        assert!(SolverParams::new(1.0, 3.2, 0.25, StepRule::Improved).validate(rho).is_err());
        assert_eq!(
            SolverParams::new(0.1, 0.1, 1.0, StepRule::Heuristic).validate(rho).unwrap(),
            Some(Warning::Uncertified(StepRule::Heuristic))
        );
        assert!(SolverParams::new(1.0, 1.0, 1.5, StepRule::Improved).validate(rho).is_err());
        assert_eq!(
            SolverParams::new(1.0, 1.0, 1.5, StepRule::Manual).validate(rho).unwrap(),
            Some(Warning::AlphaOutsideUnitInterval(1.5))
        );
    }
}
