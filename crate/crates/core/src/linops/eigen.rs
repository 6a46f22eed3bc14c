//! Dense symmetric eigenvalues by the cyclic Jacobi method.
//!
//! Only used on small certificate-sized matrices, where the `O(n^3)` sweeps
//! are cheap and the method's high relative accuracy matters more than speed.

use alloc::vec::Vec;

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::math;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Fails when the input is not square or deviates from symmetry by more
/// than `1e-10` relative to its largest entry.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.ncols() });
    }
    let scale = s.max_abs().max(1.0);
    let dev = s.asymmetry();
    if dev > 1e-10 * scale {
        return Err(Error::Asymmetric { deviation: dev });
    }
    let mut a: Vec<f64> = s.data().to_vec();
    // symmetrize exactly so rotations preserve symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = avg;
            a[j * n + i] = avg;
        }
    }
    let frob: f64 = math::sqrt(a.iter().map(|v| v * v).sum());
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if math::sqrt(2.0 * off) <= f64::EPSILON * 1e-2 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// Largest eigenvalue of `A'A`, computed densely from the smaller Gram matrix.
pub fn gram_spectral_radius(a: &DenseMatrix) -> Result<f64> {
    let gram = if a.nrows() <= a.ncols() {
        a.matmul(&a.transpose())?
    } else {
        a.transpose().matmul(a)?
    };
    let eig = symmetric_eigenvalues(&gram)?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0))
}
