//! Matrix-free linear operators and spectral estimates of `A'A`.

mod counting;
mod csr;
mod dense;
mod diagonal;
pub mod eigen;
mod spectral;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

pub use counting::CountingMap;
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use diagonal::DiagonalMap;
pub use spectral::{spectral_radius_gram, SpectralEstimate, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Largest number of entries [`materialize`] produces for structured operators.
pub const MATERIALIZE_CAP: usize = 10_000;

/// A linear map `A: R^cols -> R^rows` given by its action and the action of
/// its transpose.
///
/// The `*_into` methods do not check lengths; callers that cannot guarantee
/// them should go through [`LinearMap::apply`] and [`LinearMap::adjoint`].
pub trait LinearMap {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `out = A v`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// `out = A' w`.
    fn adjoint_into(&self, w: &[f64], out: &mut [f64]);

    /// Row-major storage, when the operator keeps one.
    fn dense_view(&self) -> Option<&DenseMatrix> {
        None
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), v.len())?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    fn adjoint(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), w.len())?;
        let mut out = vec![0.0; self.cols()];
        self.adjoint_into(w, &mut out);
        Ok(out)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
    fn adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(w, out)
    }
    fn dense_view(&self) -> Option<&DenseMatrix> {
        (**self).dense_view()
    }
}

/// Dense copy of a map, built column by column from unit vectors.
///
/// Operators that already store a dense matrix are copied directly; others
/// are refused above [`MATERIALIZE_CAP`] entries.
pub fn materialize<M: LinearMap + ?Sized>(map: &M) -> Result<DenseMatrix> {
    if let Some(d) = map.dense_view() {
        return Ok(d.clone());
    }
    let (m, n) = (map.rows(), map.cols());
    let size = m.saturating_mul(n);
    if size > MATERIALIZE_CAP {
        return Err(Error::TooLarge { size, cap: MATERIALIZE_CAP });
    }
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        map.apply_into(&e, &mut col);
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, *v);
        }
    }
    Ok(out)
}

/// Relative defect of the adjoint identity `<Av, w> = <v, A'w>` for one pair.
pub fn adjoint_defect<M: LinearMap + ?Sized>(map: &M, v: &[f64], w: &[f64]) -> Result<f64> {
    let av = map.apply(v)?;
    let atw = map.adjoint(w)?;
    let lhs = crate::math::dot(&av, w);
    let rhs = crate::math::dot(v, &atw);
    let scale = crate::math::norm(&av) * crate::math::norm(w) + crate::math::norm(v) * crate::math::norm(&atw);
    Ok(if scale == 0.0 { (lhs - rhs).abs() } else { (lhs - rhs).abs() / scale })
}
