use alloc::vec;
use alloc::vec::Vec;

use super::LinearMap;

/// Square diagonal operator. Covers the identity and scalar maps.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMap {
    diag: Vec<f64>,
}

impl DiagonalMap {
    pub fn new(diag: Vec<f64>) -> Self {
        DiagonalMap { diag }
    }

    pub fn identity(n: usize) -> Self {
        DiagonalMap { diag: vec![1.0; n] }
    }

    /// The 1x1 map `v -> a v`.
    pub fn scalar(a: f64) -> Self {
        DiagonalMap { diag: vec![a] }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearMap for DiagonalMap {
    fn rows(&self) -> usize {
        self.diag.len()
    }

    fn cols(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), x) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * x;
        }
    }

    fn adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        self.apply_into(w, out)
    }
}
