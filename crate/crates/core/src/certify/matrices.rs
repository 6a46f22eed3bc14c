use crate::error::{Error, Result};
use crate::linops::eigen::symmetric_eigenvalues;
use crate::linops::DenseMatrix;

/// Largest `n + m` accepted by [`build_matrices`].
pub const CERT_SIZE_CAP: usize = 2_000;

/// Tolerance for the closed-form cross-checks of `H` and `G`.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

/// The four `(n+m) x (n+m)` matrices of the convergence proof.
///
/// ```text
///     Q = [ rI    A' ]     M = [ I               0 ]
///         [ aA    sI ]         [ -(1-a)/s A      I ]
///
///     H = Q M^-1           G = Q' + Q - M'HM
/// ```
#[derive(Clone, Debug)]
pub struct CertificateMatrices {
    pub q: DenseMatrix,
    pub m: DenseMatrix,
    pub h: DenseMatrix,
    pub g: DenseMatrix,
    /// Columns of `A` (primal dimension).
    pub n: usize,
    /// Largest entry deviation of the computed `Q M^-1` from the closed form of `H`.
    pub h_deviation: f64,
    /// Same for `Q' + Q - M'HM` against the closed form of `G`.
    pub g_deviation: f64,
}

fn blocks(a: &DenseMatrix, top_left: &DenseMatrix, top_right: &DenseMatrix, bottom_left: &DenseMatrix, s_diag: f64) -> DenseMatrix {
    let (m, n) = (a.nrows(), a.ncols());
    let mut out = DenseMatrix::zeros(n + m, n + m);
    out.set_block(0, 0, top_left);
    out.set_block(0, n, top_right);
    out.set_block(n, 0, bottom_left);
    for i in 0..m {
        out.set(n + i, n + i, s_diag);
    }
    out
}

fn scaled(a: &DenseMatrix, c: f64) -> DenseMatrix {
    DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| c * a.get(i, j))
}

fn scaled_identity(n: usize, c: f64) -> DenseMatrix {
    scaled(&DenseMatrix::identity(n), c)
}

/// Builds `Q`, `M`, `H`, `G` from a dense `A` and verifies the products
/// against the closed forms
/// `H = [rI + (1-a)/s A'A, A'; A, sI]` and `G = [rI + a(1-a)/s A'A, A'; A, sI]`.
pub fn build_matrices(a: &DenseMatrix, r: f64, s: f64, alpha: f64) -> Result<CertificateMatrices> {
    let (m, n) = (a.nrows(), a.ncols());
    if n + m > CERT_SIZE_CAP {
        return Err(Error::TooLarge { size: n + m, cap: CERT_SIZE_CAP });
    }
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument("r and s must be positive"));
    }
    let at = a.transpose();
    let ata = at.matmul(a)?;
    let c = (1.0 - alpha) / s;

    let q = blocks(a, &scaled_identity(n, r), &at, &scaled(a, alpha), s);
    let mut mm = DenseMatrix::identity(n + m);
    mm.set_block(n, 0, &scaled(a, -c));
    let mut m_inv = DenseMatrix::identity(n + m);
    m_inv.set_block(n, 0, &scaled(a, c));

    let h_prod = q.matmul(&m_inv)?;
    let h_closed = blocks(a, &scaled_identity(n, r).add_scaled(&ata, c)?, &at, a, s);
    let h_deviation = h_prod.max_abs_diff(&h_closed);

    let g_prod = q.transpose().add_scaled(&q, 1.0)?.add_scaled(&mm.transpose().matmul(&h_prod)?.matmul(&mm)?, -1.0)?;
    let g_closed = blocks(a, &scaled_identity(n, r).add_scaled(&ata, alpha * c)?, &at, a, s);
    let g_deviation = g_prod.max_abs_diff(&g_closed);

    let scale = 1.0 + h_closed.max_abs();
    if h_deviation > CLOSED_FORM_TOL * scale {
        return Err(Error::ClosedFormMismatch { deviation: h_deviation });
    }
    if g_deviation > CLOSED_FORM_TOL * scale {
        return Err(Error::ClosedFormMismatch { deviation: g_deviation });
    }
    Ok(CertificateMatrices { q, m: mm, h: h_closed, g: g_closed, n, h_deviation, g_deviation })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(s)?;
    eig.first().copied().ok_or(Error::Empty)
}

/// True iff the smallest eigenvalue of `s` exceeds `tol`.
///
/// Rejects matrices that are not symmetric within `1e-10`.
pub fn is_positive_definite(s: &DenseMatrix, tol: f64) -> Result<bool> {
    let dev = s.asymmetry();
    if dev > 1e-10 {
        return Err(Error::Asymmetric { deviation: dev });
    }
    Ok(min_eigenvalue(s)? > tol)
}
