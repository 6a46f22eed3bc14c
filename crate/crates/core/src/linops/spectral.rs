use alloc::vec;

use super::LinearMap;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{streams, Stream};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Power-iteration estimate of `rho(A'A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub iterations_used: usize,
    /// Relative change of the last two Rayleigh quotients was within tolerance.
    pub converged: bool,
}

/// Power iteration on `v -> A'(Av)` from a seeded uniform start vector.
///
/// Stops once two consecutive Rayleigh quotients agree to `tol` relative,
/// or after `max_iter` products. A start vector that collapses to zero is
/// redrawn once from a second stream before giving up.
pub fn spectral_radius_gram<M: LinearMap + ?Sized>(
    map: &M,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1"));
    }
    let n = map.cols();
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; map.rows()];
    let mut w = vec![0.0; n];

    let mut attempt = 0;
    'restart: loop {
        let mut stream = Stream::new(seed, streams::START + attempt);
        v.iter_mut().for_each(|x| *x = stream.uniform(-1.0, 1.0));
        let nv = math::norm(&v);
        if nv == 0.0 {
            if attempt == 0 {
                attempt += 1;
                continue 'restart;
            }
            return Err(Error::DegenerateStart);
        }
        v.iter_mut().for_each(|x| *x /= nv);

        let mut prev: Option<f64> = None;
        for it in 1..=max_iter {
            map.apply_into(&v, &mut av);
            map.adjoint_into(&av, &mut w);
            let rq = math::dot(&v, &w).max(0.0);
            let nw = math::norm(&w);
            if nw == 0.0 || !nw.is_finite() {
                if attempt == 0 && it == 1 {
                    attempt += 1;
                    continue 'restart;
                }
                if nw == 0.0 {
                    return Err(Error::DegenerateStart);
                }
                return Err(Error::InvalidArgument("operator produced non-finite values"));
            }
            if let Some(p) = prev {
                if (rq - p).abs() <= tol * rq {
                    return Ok(SpectralEstimate { rho: rq, iterations_used: it, converged: true });
                }
            }
            prev = Some(rq);
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
        }
        return Ok(SpectralEstimate { rho: prev.unwrap_or(0.0), iterations_used: max_iter, converged: false });
    }
}
