use core::sync::atomic::{AtomicUsize, Ordering};

use super::{DenseMatrix, LinearMap};

/// Wraps a map and counts forward and adjoint applications.
#[derive(Debug)]
pub struct CountingMap<M> {
    inner: M,
    forward: AtomicUsize,
    adjoint: AtomicUsize,
}

impl<M> CountingMap<M> {
    pub fn new(inner: M) -> Self {
        CountingMap { inner, forward: AtomicUsize::new(0), adjoint: AtomicUsize::new(0) }
    }

    pub fn forward_count(&self) -> usize {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> usize {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: LinearMap> LinearMap for CountingMap<M> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.forward.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(v, out)
    }

    fn adjoint_into(&self, w: &[f64], out: &mut [f64]) {
        self.adjoint.fetch_add(1, Ordering::Relaxed);
        self.inner.adjoint_into(w, out)
    }

    fn dense_view(&self) -> Option<&DenseMatrix> {
        self.inner.dense_view()
    }
}
