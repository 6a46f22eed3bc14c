//! Generalized primal-dual splitting for convex-concave saddle point problems
//!
//! ```text
//!     min_{x in X} max_{y in Y}  f(x) - y'Ax - g(y)
//! ```
//!
//! The iteration engine ([`pdsolver`]) runs the four-step scheme
//!
//! ```text
//!     x+   = prox_{f/r}(x + A'y / r)
//!     xbar = x+ + alpha (x+ - x)
//!     ybar = prox_{g/s}(y - A xbar / s)
//!     y+   = ybar - (1 - alpha) A(x+ - x) / s
//! ```
//!
//! which converges whenever `r s > (1 - alpha + alpha^2) rho(A'A)`.
//! With `alpha = 1` it is the classic Chambolle-Pock method; `alpha = 1/2`
//! gives the sharpest bound `r s > 0.75 rho(A'A)`.
//!
//! ```
//! use genpd_core::linops::spectral_radius_gram;
//! use genpd_core::model::LinearBox;
//! use genpd_core::pdsolver::solve;
//! use genpd_core::{DenseMatrix, Iterate, Problem, SolverParams, StepRule};
//!
//! // min x1 + 2 x2 + 3 x3  subject to  x1 + x2 + x3 = 1,  0 <= x <= 1
//! let a = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
//! let cost = LinearBox { cost: vec![1.0, 2.0, 3.0], lo: 0.0, hi: 1.0 };
//! let problem = Problem::linear_equality(&a, cost, vec![1.0]).unwrap();
//!
//! let rho = spectral_radius_gram(&a, 1e-12, 1000, 1).unwrap().rho;
//! let (r, s) = (1.0, 0.75 * rho * 1.01);
//! let params = SolverParams::new(r, s, 0.5, StepRule::Optimal);
//! params.validate(rho).unwrap();
//!
//! let report = solve(&problem, &params, Iterate::zeros(3, 1), &mut []).unwrap();
//! assert!((report.final_iterate.x[0] - 1.0).abs() < 1e-6);
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front end and benchmark tables live in the `genpd` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod math;
pub mod rng;

pub mod linops;
pub mod model;
pub mod pdsolver;
pub mod certify;
pub mod counterexample;
pub mod apps;

pub use error::{Error, Result};
pub use linops::{CountingMap, CsrMatrix, DenseMatrix, DiagonalMap, LinearMap, SpectralEstimate};
pub use model::{Problem, SaddleProblem, ViPoint};
pub use pdsolver::{Iterate, Monitor, SolveReport, SolverParams, StepRecord, StepRule, StopReason};
