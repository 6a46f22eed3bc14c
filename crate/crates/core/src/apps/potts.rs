//! Multi-label segmentation through the continuous max-flow form of the
//! convex Potts relaxation:
//!
//! ```text
//!     max  sum p_s
//!     s.t. Div q_i - p_s + p_i = 0,  |q_i| <= mu,  p_i <= rho_i,  i = 1..m
//! ```
//!
//! The multipliers `u_i` of the flow constraints are the relaxed label
//! indicators. Images are `width x height` grids stored row-major; a vector
//! field stores its horizontal components followed by its vertical ones.
//!
//! The primal vector of the stacked problem is `(p_s; q_1..q_m; p_1..p_m)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linops::LinearMap;
use crate::math;
use crate::model::{EqualityDual, Problem, ProxTerm, FEAS_TOL};
use crate::pdsolver::{StopReason, DIVERGENCE_THRESHOLD};
use crate::rng::{streams, Stream};

/// Stopping tolerance on the average dual error.
pub const ADE_TOL: f64 = 1e-7;

/// `rho(A'A) <= 9 + m` for the stacked operator.
pub fn rho_bound(labels: usize) -> f64 {
    9.0 + labels as f64
}

/// A rectangular pixel grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty);
        }
        Ok(Grid { width, height })
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Forward differences; zero across the last column and row.
    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let (gx, gy) = out.split_at_mut(n);
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                gx[p] = if j + 1 < w { u[p + 1] - u[p] } else { 0.0 };
                gy[p] = if i + 1 < h { u[p + w] - u[p] } else { 0.0 };
            }
        }
    }

    /// `Div = -grad'`.
    pub fn divergence_into(&self, q: &[f64], out: &mut [f64]) {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let (qx, qy) = q.split_at(n);
        out.fill(0.0);
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                if j + 1 < w {
                    out[p] += qx[p];
                    out[p + 1] -= qx[p];
                }
                if i + 1 < h {
                    out[p] += qy[p];
                    out[p + w] -= qy[p];
                }
            }
        }
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.pixels(), u.len())?;
        let mut out = vec![0.0; 2 * self.pixels()];
        self.gradient_into(u, &mut out);
        Ok(out)
    }

    pub fn divergence(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_len(2 * self.pixels(), q.len())?;
        let mut out = vec![0.0; self.pixels()];
        self.divergence_into(q, &mut out);
        Ok(out)
    }
}

/// `q / max(1, |q|/mu)` per pixel, in place.
pub fn project_ball(q: &mut [f64], mu: f64) {
    let n = q.len() / 2;
    let (qx, qy) = q.split_at_mut(n);
    for (a, b) in qx.iter_mut().zip(qy.iter_mut()) {
        let norm = math::sqrt(*a * *a + *b * *b);
        let scale = (norm / mu).max(1.0);
        *a /= scale;
        *b /= scale;
    }
}

/// `min(p, cap)` per pixel, in place.
pub fn project_cap(p: &mut [f64], cap: &[f64]) {
    for (v, c) in p.iter_mut().zip(cap) {
        *v = v.min(*c);
    }
}

/// Costs, TV weight and grid of a segmentation problem.
#[derive(Clone, Debug)]
pub struct PottsInstance {
    pub grid: Grid,
    pub labels: usize,
    /// `rho_i(x)` stored label by label, `labels * pixels` entries.
    pub costs: Vec<f64>,
    pub mu: f64,
}

impl PottsInstance {
    pub fn new(grid: Grid, labels: usize, costs: Vec<f64>, mu: f64) -> Result<Self> {
        if labels == 0 {
            return Err(Error::InvalidArgument("at least one label is required"));
        }
        check_len(labels * grid.pixels(), costs.len())?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument("mu must be positive"));
        }
        if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument("costs must be finite and nonnegative"));
        }
        Ok(PottsInstance { grid, labels, costs, mu })
    }

    /// `rho_i(x) = |I(x) - c_i|` for the label means `c_i`.
    pub fn from_intensities(grid: Grid, image: &[f64], means: &[f64], mu: f64) -> Result<Self> {
        check_len(grid.pixels(), image.len())?;
        let costs = means.iter().flat_map(|c| image.iter().map(move |v| (v - c).abs())).collect();
        PottsInstance::new(grid, means.len(), costs, mu)
    }

    pub fn pixels(&self) -> usize {
        self.grid.pixels()
    }

    pub fn cost(&self, label: usize) -> &[f64] {
        let n = self.pixels();
        &self.costs[label * n..(label + 1) * n]
    }

    pub fn operator(&self) -> PottsOperator {
        PottsOperator { grid: self.grid, labels: self.labels }
    }

    /// The stacked problem `min -1'p_s + I_C(p, q)` s.t. `A(p_s; q; p) = 0`.
    pub fn stacked_problem(&self) -> Problem<PottsOperator, FlowTerm<'_>, EqualityDual> {
        Problem::new(self.operator(), FlowTerm { instance: self }, EqualityDual { rhs: vec![0.0; self.labels * self.pixels()] })
    }
}

/// Four flat quadrants with the given means plus Gaussian noise.
/// Returns the image and its ground-truth labels.
pub fn quadrant_image(size: usize, means: &[f64; 4], noise: f64, seed: u64) -> Result<(Grid, Vec<f64>, Vec<usize>)> {
    let grid = Grid::new(size, size)?;
    let half = size / 2;
    let mut g = Stream::new(seed, streams::NOISE);
    let mut image = Vec::with_capacity(grid.pixels());
    let mut truth = Vec::with_capacity(grid.pixels());
    for i in 0..size {
        for j in 0..size {
            let label = usize::from(i >= half) * 2 + usize::from(j >= half);
            truth.push(label);
            image.push(means[label] + noise * g.gaussian());
        }
    }
    Ok((grid, image, truth))
}

/// The constraint operator, block row `i` being `-p_s + Div q_i + p_i`.
#[derive(Clone, Copy, Debug)]
pub struct PottsOperator {
    pub grid: Grid,
    pub labels: usize,
}

impl LinearMap for PottsOperator {
    fn rows(&self) -> usize {
        self.labels * self.grid.pixels()
    }

    fn cols(&self) -> usize {
        (1 + 3 * self.labels) * self.grid.pixels()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.pixels();
        let m = self.labels;
        let (ps, rest) = v.split_at(n);
        let (q, p) = rest.split_at(2 * m * n);
        for i in 0..m {
            let o = &mut out[i * n..(i + 1) * n];
            self.grid.divergence_into(&q[2 * i * n..2 * (i + 1) * n], o);
            for ((oi, s), pi) in o.iter_mut().zip(ps).zip(&p[i * n..(i + 1) * n]) {
                *oi += pi - s;
            }
        }
    }

    fn adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        let n = self.grid.pixels();
        let m = self.labels;
        let (ps, rest) = out.split_at_mut(n);
        let (q, p) = rest.split_at_mut(2 * m * n);
        ps.fill(0.0);
        for i in 0..m {
            let ui = &w[i * n..(i + 1) * n];
            for (s, u) in ps.iter_mut().zip(ui) {
                *s -= u;
            }
            // Div' = -grad
            let qi = &mut q[2 * i * n..2 * (i + 1) * n];
            self.grid.gradient_into(ui, qi);
            for v in qi.iter_mut() {
                *v = -*v;
            }
            p[i * n..(i + 1) * n].copy_from_slice(ui);
        }
    }
}

/// `f(p_s, q, p) = -1'p_s + I_C(p, q)`.
#[derive(Clone, Copy, Debug)]
pub struct FlowTerm<'a> {
    pub instance: &'a PottsInstance,
}

impl ProxTerm for FlowTerm<'_> {
    fn prox_into(&self, v: &[f64], step: f64, out: &mut [f64]) {
        let inst = self.instance;
        let (n, m) = (inst.pixels(), inst.labels);
        out.copy_from_slice(v);
        let (ps, rest) = out.split_at_mut(n);
        for s in ps.iter_mut() {
            *s += step;
        }
        let (q, p) = rest.split_at_mut(2 * m * n);
        for i in 0..m {
            project_ball(&mut q[2 * i * n..2 * (i + 1) * n], inst.mu);
            project_cap(&mut p[i * n..(i + 1) * n], inst.cost(i));
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        -z[..self.instance.pixels()].iter().sum::<f64>()
    }

    fn is_feasible(&self, z: &[f64]) -> bool {
        let inst = self.instance;
        let (n, m) = (inst.pixels(), inst.labels);
        let (q, p) = z[n..].split_at(2 * m * n);
        let ball_ok = (0..m).all(|i| {
            let qi = &q[2 * i * n..2 * (i + 1) * n];
            (0..n).all(|k| math::sqrt(qi[k] * qi[k] + qi[n + k] * qi[n + k]) <= inst.mu + FEAS_TOL)
        });
        let cap_ok = (0..m).all(|i| p[i * n..(i + 1) * n].iter().zip(inst.cost(i)).all(|(v, c)| *v <= c + FEAS_TOL));
        ball_ok && cap_ok
    }
}

/// Flows and multipliers, laid out as in the stacked problem.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub p_s: Vec<f64>,
    /// `m` vector fields of `2 * pixels` entries each.
    pub q: Vec<f64>,
    /// `m` sink flows.
    pub p: Vec<f64>,
    /// `m` multiplier grids.
    pub u: Vec<f64>,
}

impl FlowState {
    /// Zero flows and `u_i = 1/m`.
    pub fn initial(instance: &PottsInstance) -> Self {
        let (n, m) = (instance.pixels(), instance.labels);
        FlowState {
            p_s: vec![0.0; n],
            q: vec![0.0; 2 * m * n],
            p: vec![0.0; m * n],
            u: vec![1.0 / m as f64; m * n],
        }
    }

    /// `(p_s; q; p)`.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.p_s.len() + self.q.len() + self.p.len());
        x.extend_from_slice(&self.p_s);
        x.extend_from_slice(&self.q);
        x.extend_from_slice(&self.p);
        x
    }

    pub fn from_primal(x: &[f64], u: Vec<f64>, instance: &PottsInstance) -> Result<Self> {
        let (n, m) = (instance.pixels(), instance.labels);
        check_len((1 + 3 * m) * n, x.len())?;
        check_len(m * n, u.len())?;
        Ok(FlowState {
            p_s: x[..n].to_vec(),
            q: x[n..n + 2 * m * n].to_vec(),
            p: x[n + 2 * m * n..].to_vec(),
            u,
        })
    }

    fn sup_norm(&self) -> f64 {
        [&self.p_s, &self.q, &self.p, &self.u].iter().map(|v| math::norm_inf(v)).fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        [&self.p_s, &self.q, &self.p, &self.u].iter().all(|v| math::all_finite(v))
    }
}

/// One sweep of the four update blocks: flows from `u^k`, then `u` from the
/// extrapolated flows `2 (new) - (old)`.
pub fn step_potts(state: &FlowState, instance: &PottsInstance, r: f64, s: f64) -> FlowState {
    let grid = instance.grid;
    let (n, m) = (instance.pixels(), instance.labels);
    let mut next = state.clone();
    let mut grad = vec![0.0; 2 * n];
    let mut u_sum = vec![0.0; n];

    for i in 0..m {
        let ui = &state.u[i * n..(i + 1) * n];
        grid.gradient_into(ui, &mut grad);
        let qi = &mut next.q[2 * i * n..2 * (i + 1) * n];
        for (q, g) in qi.iter_mut().zip(&grad) {
            *q -= g / r;
        }
        project_ball(qi, instance.mu);

        let pi = &mut next.p[i * n..(i + 1) * n];
        for (p, u) in pi.iter_mut().zip(ui) {
            *p += u / r;
        }
        project_cap(pi, instance.cost(i));

        for (t, u) in u_sum.iter_mut().zip(ui) {
            *t += u;
        }
    }
    for (ps, t) in next.p_s.iter_mut().zip(&u_sum) {
        *ps += (1.0 - t) / r;
    }

    let ps_bar: Vec<f64> = next.p_s.iter().zip(&state.p_s).map(|(a, b)| 2.0 * a - b).collect();
    let mut q_bar = vec![0.0; 2 * n];
    let mut div = vec![0.0; n];
    for i in 0..m {
        let range = 2 * i * n..2 * (i + 1) * n;
        for ((qb, a), b) in q_bar.iter_mut().zip(&next.q[range.clone()]).zip(&state.q[range]) {
            *qb = 2.0 * a - b;
        }
        grid.divergence_into(&q_bar, &mut div);
        let sl = i * n..(i + 1) * n;
        let (pn, po) = (&next.p[sl.clone()], &state.p[sl.clone()]);
        for (k, u) in next.u[sl].iter_mut().enumerate() {
            let residual = div[k] - ps_bar[k] + (2.0 * pn[k] - po[k]);
            *u -= residual / s;
        }
    }
    next
}

/// `ADE = |u^k - u^{k-1}| / size(u)`.
pub fn average_dual_error(u_new: &[f64], u_old: &[f64]) -> f64 {
    math::sqrt(math::dist_sq(u_new, u_old)) / u_new.len().max(1) as f64
}

/// `argmax_i u_i(x)` per pixel; ties go to the lower label.
pub fn labels_from(u: &[f64], labels: usize) -> Vec<usize> {
    let n = u.len() / labels.max(1);
    (0..n)
        .map(|x| {
            let mut best = 0;
            for i in 1..labels {
                if u[i * n + x] > u[best * n + x] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// `max_x |sum_i u_i(x) - 1|`.
pub fn simplex_defect(u: &[f64], labels: usize) -> f64 {
    let n = u.len() / labels.max(1);
    (0..n)
        .map(|x| ((0..labels).map(|i| u[i * n + x]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Run settings of [`solve_potts`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PottsParams {
    pub r: f64,
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl PottsParams {
    /// `r = factor * (9 + m) / s`, i.e. `r s = factor * (9 + m)`.
    pub fn from_product(labels: usize, factor: f64, s: f64) -> Result<Self> {
        if !(factor > 0.0 && s > 0.0) {
            return Err(Error::InvalidArgument("factor and s must be positive"));
        }
        Ok(PottsParams { r: factor * rho_bound(labels) / s, s, tol: ADE_TOL, max_iter: 100_000 })
    }
}

#[derive(Clone, Debug)]
pub struct PottsReport {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub final_ade: f64,
    /// `(k, ADE(k))` for every iteration.
    pub ade_history: Vec<(usize, f64)>,
    pub labels: Vec<usize>,
    pub state: FlowState,
}

/// Iterates [`step_potts`] from [`FlowState::initial`] until `ADE < tol`.
pub fn solve_potts(instance: &PottsInstance, params: &PottsParams) -> Result<PottsReport> {
    if !(params.r > 0.0 && params.s > 0.0) {
        return Err(Error::InvalidArgument("r and s must be positive"));
    }
    let mut state = FlowState::initial(instance);
    let mut history = Vec::new();
    let mut stop_reason = StopReason::MaxIter;
    let mut ade = f64::NAN;
    let mut k = 0;
    while k < params.max_iter {
        let next = step_potts(&state, instance, params.r, params.s);
        k += 1;
        ade = average_dual_error(&next.u, &state.u);
        state = next;
        if !state.is_finite() || state.sup_norm() > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { iterations: k });
        }
        history.push((k, ade));
        if ade < params.tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }
    Ok(PottsReport {
        iterations: k,
        stop_reason,
        final_ade: ade,
        ade_history: history,
        labels: labels_from(&state.u, instance.labels),
        state,
    })
}
