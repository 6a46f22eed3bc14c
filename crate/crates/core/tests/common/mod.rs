//! Reference implementations used as independent oracles by the
//! integration and acceptance tests. Nothing here calls into the solver.

#![allow(dead_code)]

use genpd_core::rng::{streams, Stream};
use genpd_core::DenseMatrix;
use nalgebra::DMatrix;

/// Eigenvalues of a symmetric matrix from nalgebra, ascending.
pub fn eigenvalues(s: &DenseMatrix) -> Vec<f64> {
    let m = DMatrix::from_row_slice(s.nrows(), s.ncols(), s.data());
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Largest eigenvalue of `A'A` through nalgebra.
pub fn rho_dense(a: &DenseMatrix) -> f64 {
    let m = DMatrix::from_row_slice(a.nrows(), a.ncols(), a.data());
    let g = m.transpose() * &m;
    g.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn gaussian_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    let mut g = Stream::new(seed, streams::MATRIX);
    DenseMatrix::from_fn(rows, cols, |_, _| g.gaussian())
}

pub fn gaussian_vec(g: &mut Stream, n: usize) -> Vec<f64> {
    (0..n).map(|_| g.gaussian()).collect()
}

/// Best and second-best `sum_i c[i][perm(i)]` over all permutations, summed
/// in row order.
pub fn best_assignments(n: usize, costs: &[f64]) -> (f64, f64, Vec<usize>) {
    fn rec(i: usize, n: usize, c: &[f64], used: &mut [bool], perm: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
        if i == n {
            let v = perm.iter().enumerate().fold(0.0, |acc, (r, col)| acc + c[r * n + col]);
            out.push((v, perm.clone()));
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(i + 1, n, c, used, perm, out);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut all = Vec::new();
    rec(0, n, costs, &mut vec![false; n], &mut Vec::new(), &mut all);
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let second = if all.len() > 1 { all[1].0 } else { f64::NEG_INFINITY };
    (all[0].0, second, all[0].1.clone())
}

/// `argmin_z |z| + (z - v)^2 / (2 lambda)` on a fine grid around `v`.
pub fn shrink_by_grid(v: f64, lambda: f64) -> f64 {
    let obj = |z: f64| z.abs() + (z - v) * (z - v) / (2.0 * lambda);
    let (lo, hi) = (v.min(0.0) - 1.0, v.max(0.0) + 1.0);
    let steps = 200_000;
    let mut best = lo;
    for k in 0..=steps {
        let z = lo + (hi - lo) * k as f64 / steps as f64;
        if obj(z) < obj(best) {
            best = z;
        }
    }
    // refine around the grid minimizer
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best - h, best + h);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if obj(m1) < obj(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// One step of the generalized scheme written out with a dense `A` and the
/// products `A xbar`, `A(x+ - x)` formed directly.
#[allow(clippy::too_many_arguments)]
pub fn reference_step(
    a: &DenseMatrix,
    prox_f: &dyn Fn(&[f64], f64) -> Vec<f64>,
    prox_g: &dyn Fn(&[f64], f64) -> Vec<f64>,
    r: f64,
    s: f64,
    alpha: f64,
    x: &[f64],
    y: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (a.nrows(), a.ncols());
    let mul = |v: &[f64]| -> Vec<f64> { (0..m).map(|i| (0..n).map(|j| a.get(i, j) * v[j]).sum()).collect() };
    let mul_t = |w: &[f64]| -> Vec<f64> { (0..n).map(|j| (0..m).map(|i| a.get(i, j) * w[i]).sum()).collect() };
    let aty = mul_t(y);
    let v: Vec<f64> = (0..n).map(|j| x[j] + aty[j] / r).collect();
    let xp = prox_f(&v, 1.0 / r);
    let xbar: Vec<f64> = (0..n).map(|j| xp[j] + alpha * (xp[j] - x[j])).collect();
    let axbar = mul(&xbar);
    let w: Vec<f64> = (0..m).map(|i| y[i] - axbar[i] / s).collect();
    let ybar = prox_g(&w, 1.0 / s);
    let dx: Vec<f64> = (0..n).map(|j| xp[j] - x[j]).collect();
    let adx = mul(&dx);
    let yp = (0..m).map(|i| ybar[i] - (1.0 - alpha) / s * adx[i]).collect();
    (xp, yp)
}

pub fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let s: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt().max(b.iter().map(|p| p * p).sum::<f64>().sqrt());
    if s == 0.0 {
        d
    } else {
        d / s
    }
}
