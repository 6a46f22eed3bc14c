use crate::linops::LinearMap;
use crate::math;
use crate::model::ViPoint;
use crate::pdsolver::improvement_factor;

use super::CertificateMatrices;

/// Relative tolerance used when deciding whether `H` and `G` are usable
/// (positive semidefinite up to rounding).
pub const METRIC_RTOL: f64 = 1e-9;

/// Access to the `H`- and `G`-quadratic forms and to `M`.
pub trait CertificateMetric {
    fn h_norm_sq(&self, d: &ViPoint) -> f64;
    fn g_norm_sq(&self, d: &ViPoint) -> f64;
    fn apply_m(&self, d: &ViPoint) -> ViPoint;
    /// Whether `H` and `G` are positive semidefinite, i.e. the certificate
    /// inequalities carry information.
    fn metric_valid(&self) -> bool;
}

impl CertificateMetric for CertificateMatrices {
    fn h_norm_sq(&self, d: &ViPoint) -> f64 {
        self.h.quad_form(&d.concat())
    }

    fn g_norm_sq(&self, d: &ViPoint) -> f64 {
        self.g.quad_form(&d.concat())
    }

    fn apply_m(&self, d: &ViPoint) -> ViPoint {
        ViPoint::from_concat(&self.m.mul_vec(&d.concat()), self.n)
    }

    fn metric_valid(&self) -> bool {
        let ok = |s: &crate::linops::DenseMatrix| {
            let floor = -METRIC_RTOL * (1.0 + s.max_abs());
            super::min_eigenvalue(s).map(|e| e >= floor).unwrap_or(false)
        };
        ok(&self.h) && ok(&self.g)
    }
}

/// Matrix-free `H`, `G` and `M` for operators too large to materialize.
///
/// ```text
///     |d|_H^2 = r|dx|^2 + (1-a)/s |A dx|^2 + 2<dy, A dx> + s|dy|^2
///     |d|_G^2 = r|dx|^2 + a(1-a)/s |A dx|^2 + 2<dy, A dx> + s|dy|^2
/// ```
pub struct OperatorMetric<'a, M: ?Sized> {
    pub map: &'a M,
    pub r: f64,
    pub s: f64,
    pub alpha: f64,
    /// `rho(A'A)`, used only by [`CertificateMetric::metric_valid`].
    pub rho: f64,
}

impl<'a, M: LinearMap + ?Sized> OperatorMetric<'a, M> {
    pub fn new(map: &'a M, r: f64, s: f64, alpha: f64, rho: f64) -> Self {
        OperatorMetric { map, r, s, alpha, rho }
    }

    fn form(&self, d: &ViPoint, ata_weight: f64) -> f64 {
        let adx = self.map.apply(&d.x).expect("dimensions checked by caller");
        self.r * math::norm_sq(&d.x)
            + ata_weight * math::norm_sq(&adx)
            + 2.0 * math::dot(&d.y, &adx)
            + self.s * math::norm_sq(&d.y)
    }
}

impl<M: LinearMap + ?Sized> CertificateMetric for OperatorMetric<'_, M> {
    fn h_norm_sq(&self, d: &ViPoint) -> f64 {
        self.form(d, (1.0 - self.alpha) / self.s)
    }

    fn g_norm_sq(&self, d: &ViPoint) -> f64 {
        self.form(d, self.alpha * (1.0 - self.alpha) / self.s)
    }

    fn apply_m(&self, d: &ViPoint) -> ViPoint {
        let c = (1.0 - self.alpha) / self.s;
        let adx = self.map.apply(&d.x).expect("dimensions checked by caller");
        ViPoint::new(d.x.clone(), d.y.iter().zip(&adx).map(|(y, a)| y - c * a).collect())
    }

    fn metric_valid(&self) -> bool {
        // H >= 0 iff rs >= a rho, G >= 0 iff rs >= (1 - a + a^2) rho
        let rs = self.r * self.s * (1.0 + METRIC_RTOL);
        rs >= self.alpha * self.rho && rs >= improvement_factor(self.alpha) * self.rho
    }
}
