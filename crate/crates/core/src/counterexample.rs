//! The scalar problem `min { 0 x : x = 0 }` with `A = 1`, `s = 1`.
//!
//! Here the classic (`alpha = 1`) iteration is linear, `u+ = P(r) u` with
//!
//! ```text
//!     P(r) = [  1      1/r   ]
//!            [ -1   1 - 2/r  ]
//! ```
//!
//! whose eigenvalues are `(1 - 1/r) -+ sqrt(1/r^2 - 1/r)`. For `r < 0.75`
//! the smaller one drops below `-1` and the iteration diverges, which shows
//! the constant `0.75` in `r s > 0.75 rho(A'A)` cannot be lowered.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linops::DiagonalMap;
use crate::math;
use crate::model::{EqualityDual, Problem, Zero};
use crate::pdsolver::DIVERGENCE_THRESHOLD;

/// Spectral moduli within this distance of 1 are classified as boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `min { 0 x : x = 0, x in R }` as a saddle problem.
pub fn counterexample_problem() -> Problem<DiagonalMap, Zero, EqualityDual> {
    Problem::linear_equality(DiagonalMap::scalar(1.0), Zero, vec![0.0]).expect("1x1 data")
}

/// The iteration matrix `P(r)` (with `s = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationMatrix {
    pub r: f64,
    pub entries: [[f64; 2]; 2],
}

impl IterationMatrix {
    pub fn new(r: f64) -> Result<Self> {
        check_r(r)?;
        Ok(IterationMatrix { r, entries: [[1.0, 1.0 / r], [-1.0, 1.0 - 2.0 / r]] })
    }

    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        let e = &self.entries;
        [e[0][0] * u[0] + e[0][1] * u[1], e[1][0] * u[0] + e[1][1] * u[1]]
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("r must be positive"))
    }
}

/// A possibly complex eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        math::sqrt(self.re * self.re + self.im * self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Eigenvalues of `P(r)`; `lambda1` carries the minus sign.
///
/// For `r > 1` the pair is complex conjugate with modulus `sqrt(1 - 1/r)`.
pub fn eigenvalues(r: f64) -> Result<(Eigenvalue, Eigenvalue)> {
    check_r(r)?;
    let center = 1.0 - 1.0 / r;
    let disc = 1.0 / (r * r) - 1.0 / r;
    if disc >= 0.0 {
        let root = math::sqrt(disc);
        Ok((Eigenvalue { re: center - root, im: 0.0 }, Eigenvalue { re: center + root, im: 0.0 }))
    } else {
        let root = math::sqrt(-disc);
        Ok((Eigenvalue { re: center, im: -root }, Eigenvalue { re: center, im: root }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Divergent,
    Boundary,
    Convergent,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Divergent => "divergent",
            Stability::Boundary => "boundary",
            Stability::Convergent => "convergent",
        }
    }
}

/// Spectral radius of `P(r)`.
pub fn spectral_radius(r: f64) -> Result<f64> {
    let (l1, l2) = eigenvalues(r)?;
    Ok(l1.modulus().max(l2.modulus()))
}

pub fn classify(r: f64) -> Result<Stability> {
    let rad = spectral_radius(r)?;
    Ok(if (rad - 1.0).abs() <= BOUNDARY_TOL {
        Stability::Boundary
    } else if rad > 1.0 {
        Stability::Divergent
    } else {
        Stability::Convergent
    })
}

/// Iterates of the classic scheme on the scalar problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub r: f64,
    /// `u^0, u^1, ...`; stops early if an entry became non-finite.
    pub states: Vec<[f64; 2]>,
    /// `|u^k|_inf` for each stored state.
    pub norms: Vec<f64>,
    /// First `k` with `|u^k|_inf > 1e12`.
    pub escaped_at: Option<usize>,
}

impl Simulation {
    /// Geometric-mean growth factor `(|u^K| / |u^0|)^(1/K)` over the stored states.
    pub fn growth_rate(&self) -> f64 {
        let k = self.norms.len() - 1;
        let first = self.norms[0];
        let last = self.norms[k];
        if k == 0 || first == 0.0 {
            return 0.0;
        }
        math::powf(last / first, 1.0 / k as f64)
    }
}

/// Runs `steps` iterations of `x+ = x + y/r`, `y+ = y - (2x+ - x)`.
pub fn simulate(r: f64, u0: [f64; 2], steps: usize) -> Result<Simulation> {
    check_r(r)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1"));
    }
    let inv_r = 1.0 / r;
    let inf = |u: [f64; 2]| u[0].abs().max(u[1].abs());
    let mut states = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut escaped_at = None;
    let mut u = u0;
    states.push(u);
    norms.push(inf(u));
    for k in 1..=steps {
        let x_next = u[0] + inv_r * u[1];
        let y_next = u[1] - (2.0 * x_next - u[0]);
        u = [x_next, y_next];
        if !(u[0].is_finite() && u[1].is_finite()) {
            break;
        }
        let nu = inf(u);
        if escaped_at.is_none() && nu > DIVERGENCE_THRESHOLD {
            escaped_at = Some(k);
        }
        states.push(u);
        norms.push(nu);
    }
    Ok(Simulation { r, states, norms, escaped_at })
}

/// Classification from observed growth: factors within `band` of 1 are boundary.
pub fn classify_empirically(sim: &Simulation, band: f64) -> Stability {
    let g = sim.growth_rate();
    if g > 1.0 + band {
        Stability::Divergent
    } else if g < 1.0 - band {
        Stability::Convergent
    } else {
        Stability::Boundary
    }
}

/// One row of an `r` sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub lambda1: Eigenvalue,
    pub lambda2: Eigenvalue,
    pub classification: Stability,
    pub growth_rate: f64,
}

/// The grid `start, start + step, ...` up to `stop` (inclusive within 1e-9),
/// with each point rounded to 12 decimals so `0.55 + 4 * 0.05` is `0.75`.
pub fn r_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start > 0.0) || stop < start {
        return Err(Error::InvalidArgument("sweep needs 0 < start <= stop and step > 0"));
    }
    let count = ((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..count).map(|i| math::round((start + i as f64 * step) * 1e12) / 1e12).collect())
}

/// Eigen-analysis and empirical growth for each `r` in `grid`.
pub fn sweep(grid: &[f64], u0: [f64; 2], steps: usize) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&r| {
            let (lambda1, lambda2) = eigenvalues(r)?;
            let sim = simulate(r, u0, steps)?;
            Ok(SweepRow { r, lambda1, lambda2, classification: classify(r)?, growth_rate: sim.growth_rate() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_at_known_points() {
        let (l1, l2) = eigenvalues(0.75).unwrap();
        assert!((l1.re + 1.0).abs() <= 1e-12 && l1.is_real());
        assert!((l2.re - 1.0 / 3.0).abs() <= 1e-12);
        let (l1, l2) = eigenvalues(1.0).unwrap();
        assert_eq!((l1.re, l2.re), (0.0, 0.0));
        let (l1, l2) = eigenvalues(0.5).unwrap();
        let s2 = math::sqrt(2.0);
        assert!((l1.re - (-1.0 - s2)).abs() < 1e-14);
        assert!((l2.re - (-1.0 + s2)).abs() < 1e-14);
        assert!(eigenvalues(0.0).is_err());
        assert!(eigenvalues(-1.0).is_err());
    }

    #[test]
    fn complex_pair_modulus() {
        let (l1, l2) = eigenvalues(2.0).unwrap();
        assert_eq!(l1.re, 0.5);
        assert_eq!(l1.im, -l2.im);
        assert!((l1.modulus() - math::sqrt(0.5)).abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(0.7).unwrap(), Stability::Divergent);
        assert_eq!(classify(0.75).unwrap(), Stability::Boundary);
        assert_eq!(classify(0.9).unwrap(), Stability::Convergent);
        assert!(classify(0.0).is_err());
    }

    #[test]
    fn iteration_matrix_entries() {
        let p = IterationMatrix::new(0.5).unwrap();
        assert_eq!(p.entries, [[1.0, 2.0], [-1.0, -3.0]]);
        assert_eq!(p.apply([1.0, 1.0]), [3.0, -4.0]);
    }

    #[test]
    fn simulation_origin_and_escape() {
        let sim = simulate(0.7, [0.0, 0.0], 50).unwrap();
        assert!(sim.states.iter().all(|u| *u == [0.0, 0.0]));
        let sim = simulate(0.7, [1.0, 1.0], 10_000).unwrap();
        assert!(sim.escaped_at.unwrap() < 10_000);
    }

    #[test]
    fn simulation_matches_iteration_matrix() {
        let p = IterationMatrix::new(0.9).unwrap();
        let sim = simulate(0.9, [1.0, -0.5], 20).unwrap();
        let mut u = [1.0, -0.5];
        for k in 1..=20 {
            u = p.apply(u);
            let s = sim.states[k];
            let scale = u[0].abs().max(u[1].abs());
            assert!((s[0] - u[0]).abs() <= 1e-13 * scale && (s[1] - u[1]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn grid_hits_three_quarters_exactly() {
        let g = r_grid(0.55, 1.2, 0.05).unwrap();
        assert_eq!(g.len(), 14);
        assert!(g.contains(&0.75));
        assert_eq!(*g.last().unwrap(), 1.2);
    }
}
