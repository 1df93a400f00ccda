//! Learning disentangled semantic directions from latent samples.
//!
//! The crate finds an orthonormal basis `W` whose span reconstructs a latent
//! matrix `Z`, stays close to a non-negative surrogate `F`, and is pushed
//! away from given attribute boundary normals `S`. Around the solver sit the
//! dense kernels it needs ([`matrix`], [`svd`]), boundary handling
//! ([`boundary`]), disentanglement metrics ([`metrics`]) and a planted-model
//! generator with brute-force oracles ([`synth`]).

// `!(x > t)` is how NaN gets rejected along with small values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read closer to the math in the dense kernels
#![allow(clippy::needless_range_loop)]

pub mod boundary;
pub mod error;
pub mod matrix;
pub mod metrics;
mod rng;
pub mod solver;
pub mod svd;
pub mod synth;

pub use error::{BoundaryError, MatrixError, MetricsError, SolveError, SvdError, SynthError};
pub use matrix::Matrix;
pub use solver::{
    aidc_solve, solve_variant, InitMode, SolveResult, SolveState, SolveTrace, SolverConfig, Variant,
};
pub use svd::{thin_svd, truncated_svd, ThinSvd};
