//! Saddle point problems `min_x max_y f(x) - y'Ax - g(y)` and their
//! variational-inequality form.
//!
//! With `u = (x; y)`, `theta(u) = f(x) + g(y)` and `F(u) = (-A'y; Ax)`, a
//! saddle point is a `u*` in `X x Y` with
//! `theta(u) - theta(u*) + <u - u*, F(u*)> >= 0` for every feasible `u`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::math;

/// Absolute tolerance of the box and ball feasibility predicates.
pub const FEAS_TOL: f64 = 1e-9;

/// The data a primal-dual method needs from a saddle point problem.
///
/// Proximal maps are supplied in closed form by each application;
/// `prox_primal(v, tau)` returns `argmin { f(x) + |x - v|^2 / (2 tau) : x in X }`
/// and `prox_dual(w, sigma)` the analogous point for `g` over `Y`.
pub trait SaddleProblem {
    type Map: LinearMap;

    fn map(&self) -> &Self::Map;

    fn prox_primal(&self, v: &[f64], step: f64, out: &mut [f64]);

    fn prox_dual(&self, w: &[f64], step: f64, out: &mut [f64]);

    fn theta_primal(&self, x: &[f64]) -> f64;

    fn theta_dual(&self, y: &[f64]) -> f64;

    /// `Some(b)` when `g(y) = -b'y` over all of `R^m`, i.e. the problem is
    /// `min { f(x) : Ax = b, x in X }` in Lagrangian form.
    fn equality_rhs(&self) -> Option<&[f64]> {
        None
    }

    fn primal_feasible(&self, _x: &[f64]) -> bool {
        true
    }

    fn dual_feasible(&self, _y: &[f64]) -> bool {
        true
    }

    fn primal_dim(&self) -> usize {
        self.map().cols()
    }

    fn dual_dim(&self) -> usize {
        self.map().rows()
    }
}

/// A convex term with a closed-form proximal map.
pub trait ProxTerm {
    /// `out = argmin { h(z) + |z - v|^2 / (2 step) }` over the term's domain.
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]);

    fn value(&self, z: &[f64]) -> f64;

    fn is_feasible(&self, _z: &[f64]) -> bool {
        true
    }
}

/// A term usable as `g`. Linear equality duals report their right-hand side.
pub trait DualTerm: ProxTerm {
    fn equality_rhs(&self) -> Option<&[f64]> {
        None
    }
}

/// `h = 0` on the whole space.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl ProxTerm for Zero {
    fn prox_into(&self, v: &[f64], _step: f64, out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    fn value(&self, _z: &[f64]) -> f64 {
        0.0
    }
}

impl DualTerm for Zero {}

/// `h(z) = c'z` restricted to the box `lo <= z <= hi`.
#[derive(Clone, Debug)]
pub struct LinearBox {
    pub cost: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ProxTerm for LinearBox {
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        for ((o, vi), ci) in out.iter_mut().zip(v).zip(&self.cost) {
            *o = (vi - step * ci).clamp(self.lo, self.hi);
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        math::dot(&self.cost, z)
    }

    fn is_feasible(&self, z: &[f64]) -> bool {
        z.iter().all(|v| *v >= self.lo - FEAS_TOL && *v <= self.hi + FEAS_TOL)
    }
}

/// Indicator of the box `lo <= z <= hi`.
#[derive(Clone, Copy, Debug)]
pub struct BoxIndicator {
    pub lo: f64,
    pub hi: f64,
}

impl ProxTerm for BoxIndicator {
    fn prox_into(&self, v: &[f64], _step: f64, out: &mut [f64]) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi.clamp(self.lo, self.hi);
        }
    }

    fn value(&self, _z: &[f64]) -> f64 {
        0.0
    }

    fn is_feasible(&self, z: &[f64]) -> bool {
        z.iter().all(|v| *v >= self.lo - FEAS_TOL && *v <= self.hi + FEAS_TOL)
    }
}

impl DualTerm for BoxIndicator {}

/// `h(z) = |z|^2 / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfSquaredNorm;

impl ProxTerm for HalfSquaredNorm {
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let scale = 1.0 / (1.0 + step);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi * scale;
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        0.5 * math::norm_sq(z)
    }
}

impl DualTerm for HalfSquaredNorm {}

/// `g(y) = -b'y` over `R^m`: the dual term of `Ax = b`.
#[derive(Clone, Debug)]
pub struct EqualityDual {
    pub rhs: Vec<f64>,
}

impl ProxTerm for EqualityDual {
    fn prox_into(&self, w: &[f64], step: f64, out: &mut [f64]) {
        for ((o, wi), bi) in out.iter_mut().zip(w).zip(&self.rhs) {
            *o = wi + step * bi;
        }
    }

    fn value(&self, y: &[f64]) -> f64 {
        -math::dot(&self.rhs, y)
    }
}

impl DualTerm for EqualityDual {
    fn equality_rhs(&self) -> Option<&[f64]> {
        Some(&self.rhs)
    }
}

/// A saddle problem assembled from a map, a primal term and a dual term.
#[derive(Clone, Debug)]
pub struct Problem<M, F, G> {
    pub map: M,
    pub primal: F,
    pub dual: G,
}

impl<M: LinearMap, F: ProxTerm, G: DualTerm> Problem<M, F, G> {
    pub fn new(map: M, primal: F, dual: G) -> Self {
        Problem { map, primal, dual }
    }
}

impl<M: LinearMap, F: ProxTerm> Problem<M, F, EqualityDual> {
    /// `min { f(x) : Ax = b, x in X }`.
    pub fn linear_equality(map: M, primal: F, rhs: Vec<f64>) -> Result<Self> {
        check_len(map.rows(), rhs.len())?;
        Ok(Problem { map, primal, dual: EqualityDual { rhs } })
    }
}

impl<M: LinearMap, F: ProxTerm, G: DualTerm> SaddleProblem for Problem<M, F, G> {
    type Map = M;

    fn map(&self) -> &M {
        &self.map
    }

    fn prox_primal(&self, v: &[f64], step: f64, out: &mut [f64]) {
        self.primal.prox_into(v, step, out)
    }

    fn prox_dual(&self, w: &[f64], step: f64, out: &mut [f64]) {
        self.dual.prox_into(w, step, out)
    }

    fn theta_primal(&self, x: &[f64]) -> f64 {
        self.primal.value(x)
    }

    fn theta_dual(&self, y: &[f64]) -> f64 {
        self.dual.value(y)
    }

    fn equality_rhs(&self) -> Option<&[f64]> {
        self.dual.equality_rhs()
    }

    fn primal_feasible(&self, x: &[f64]) -> bool {
        self.primal.is_feasible(x)
    }

    fn dual_feasible(&self, y: &[f64]) -> bool {
        self.dual.is_feasible(y)
    }
}

/// A point `u = (x; y)` of the variational inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct ViPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ViPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        ViPoint { x, y }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        ViPoint { x: vec![0.0; n], y: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(x; y)` as one vector.
    pub fn concat(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.len());
        u.extend_from_slice(&self.x);
        u.extend_from_slice(&self.y);
        u
    }

    pub fn from_concat(u: &[f64], n: usize) -> Self {
        ViPoint { x: u[..n].to_vec(), y: u[n..].to_vec() }
    }

    pub fn sub(&self, other: &ViPoint) -> ViPoint {
        ViPoint {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn dot(&self, other: &ViPoint) -> f64 {
        math::dot(&self.x, &other.x) + math::dot(&self.y, &other.y)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(math::norm_sq(&self.x) + math::norm_sq(&self.y))
    }
}

fn check_point<P: SaddleProblem + ?Sized>(problem: &P, u: &ViPoint) -> Result<()> {
    check_len(problem.primal_dim(), u.x.len())?;
    check_len(problem.dual_dim(), u.y.len())
}

fn check_feasible<P: SaddleProblem + ?Sized>(problem: &P, u: &ViPoint) -> Result<()> {
    check_point(problem, u)?;
    if !problem.primal_feasible(&u.x) {
        return Err(Error::Infeasible("x outside X"));
    }
    if !problem.dual_feasible(&u.y) {
        return Err(Error::Infeasible("y outside Y"));
    }
    Ok(())
}

/// `theta(u) = f(x) + g(y)` for a feasible point.
pub fn theta<P: SaddleProblem + ?Sized>(problem: &P, u: &ViPoint) -> Result<f64> {
    check_feasible(problem, u)?;
    Ok(problem.theta_primal(&u.x) + problem.theta_dual(&u.y))
}

/// `F(u) = (-A'y; Ax)`.
pub fn monotone_map<P: SaddleProblem + ?Sized>(problem: &P, u: &ViPoint) -> Result<ViPoint> {
    check_point(problem, u)?;
    let map = problem.map();
    let mut fx = map.adjoint(&u.y)?;
    fx.iter_mut().for_each(|v| *v = -*v);
    let fy = map.apply(&u.x)?;
    Ok(ViPoint { x: fx, y: fy })
}

/// `theta(candidate) - theta(probe) + <candidate - probe, F(probe)>`.
///
/// Nonpositive for every feasible probe exactly when `candidate` solves the
/// variational inequality.
pub fn vi_gap<P: SaddleProblem + ?Sized>(problem: &P, candidate: &ViPoint, probe: &ViPoint) -> Result<f64> {
    let tc = theta(problem, candidate)?;
    let tp = theta(problem, probe)?;
    let fp = monotone_map(problem, probe)?;
    Ok(tc - tp + candidate.sub(probe).dot(&fp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, DiagonalMap};

    #[test]
    fn theta_on_equality_dual() {
        let p = Problem::linear_equality(DiagonalMap::identity(2), Zero, vec![1.0, 1.0]).unwrap();
        let u = ViPoint::new(vec![0.0, 0.0], vec![2.0, 3.0]);
        assert_eq!(theta(&p, &u).unwrap(), -5.0);
        assert_eq!(p.equality_rhs(), Some(&[1.0, 1.0][..]));
    }

    #[test]
    fn monotone_map_scalar_and_zero() {
        let p = Problem::linear_equality(DiagonalMap::scalar(1.0), Zero, vec![0.0]).unwrap();
        let f = monotone_map(&p, &ViPoint::new(vec![2.0], vec![3.0])).unwrap();
        assert_eq!(f, ViPoint::new(vec![-3.0], vec![2.0]));
        let f0 = monotone_map(&p, &ViPoint::zeros(1, 1)).unwrap();
        assert_eq!(f0, ViPoint::zeros(1, 1));
    }

    #[test]
    fn gap_of_point_with_itself_is_zero() {
        let a = DenseMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let p = Problem::linear_equality(a, LinearBox { cost: vec![1.0, 2.0], lo: 0.0, hi: 1.0 }, vec![1.0]).unwrap();
        let u = ViPoint::new(vec![0.3, 0.7], vec![0.5]);
        assert_eq!(vi_gap(&p, &u, &u).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_points_are_rejected() {
        let p = Problem::new(DiagonalMap::identity(1), LinearBox { cost: vec![1.0], lo: 0.0, hi: 1.0 }, Zero);
        let bad = ViPoint::new(vec![1.5], vec![0.0]);
        assert!(matches!(theta(&p, &bad), Err(Error::Infeasible(_))));
        let slightly_out = ViPoint::new(vec![1.0 + 0.5e-9], vec![0.0]);
        assert!(theta(&p, &slightly_out).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = Problem::new(DiagonalMap::identity(2), Zero, Zero);
        let u = ViPoint::new(vec![1.0], vec![0.0, 0.0]);
        assert!(matches!(monotone_map(&p, &u), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn prox_terms_closed_forms() {
        let mut out = [0.0; 3];
        LinearBox { cost: vec![1.0, -1.0, 0.0], lo: 0.0, hi: 1.0 }.prox_into(&[0.5, 0.5, 2.0], 0.25, &mut out);
        assert_eq!(out, [0.25, 0.75, 1.0]);
        EqualityDual { rhs: vec![1.0, 2.0, 3.0] }.prox_into(&[0.0, 0.0, 0.0], 0.5, &mut out);
        assert_eq!(out, [0.5, 1.0, 1.5]);
        HalfSquaredNorm.prox_into(&[2.0, 4.0, -6.0], 1.0, &mut out);
        assert_eq!(out, [1.0, 2.0, -3.0]);
    }
}
