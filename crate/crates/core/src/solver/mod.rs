//! Semantic-direction subspace solver.
//!
//! The objective over an orthonormal basis `W` (m x k), codes `P` (k x n) and
//! a non-negative auxiliary `F` (m x k), given latents `Z` (m x n) and
//! boundary normals `S` (m x k):
//!
//! ```text
//! J(W, P, F) = ‖Z − WP‖²_F + α‖W − F‖²_F − λ‖W − S‖²_F
//!              s.t. WᵀW = I, F ≥ 0
//! ```
//!
//! Every block has a closed-form minimizer, so alternating them can never
//! increase `J`:
//!
//! - `W`: with `WᵀW = I` the problem reduces to maximizing
//!   `trace(Wᵀ(ZPᵀ + αF − λS))`, an orthogonal Procrustes problem solved by
//!   the polar factor `UVᵀ` of the target.
//! - `P = WᵀZ` (least squares under orthonormal `W`).
//! - `F = max(W, 0)` (Euclidean projection onto the non-negative orthant).
//!
//! Variants of the loop (and the unconstrained baseline) live behind the
//! [`SubspaceSolver`] trait in [`registry`].

mod config;
mod loops;
pub mod registry;

pub use config::{InitMode, SolverConfig, Variant};
pub use loops::{aidc_solve, solve_baseline};
pub use registry::{builtin_registry, solve_variant, SolverRegistry, SubspaceSolver};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MatrixError, SolveError};
use crate::matrix::{
    frobenius_dist_sq, matmul, matmul_tn, orthonormality_residual, residual_norm_sq, Matrix,
};
use crate::rng::gaussian_matrix;
use crate::svd::{thin_svd, truncated_svd};

/// `update_p` refuses bases further than this from orthonormal: `P = WᵀZ`
/// is only the least-squares solution when `WᵀW = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveState {
    /// Semantic basis, `m x k`.
    pub w: Matrix,
    /// Coefficients, `k x n`.
    pub p: Matrix,
    /// Non-negative auxiliary, `m x k`. Absent for the variant that drops
    /// the non-negativity block.
    pub f: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub ortho_residual: f64,
    pub min_f: Option<f64>,
    pub rel_drop: f64,
    /// Objective after each block update within this iteration, in update
    /// order. Empty for the initial record.
    pub block_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// Set when a near-singular `WᵀW` forced a ridge-regularized solve.
    pub ridge_warning: bool,
}

impl SolveTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub state: SolveState,
    pub trace: SolveTrace,
    pub converged: bool,
    pub iterations_run: usize,
}

/// The three terms of `J`, kept apart so block updates can refresh only what
/// changed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ObjectiveParts {
    pub residual: f64,
    pub coupling: f64,
    pub boundary: f64,
}

impl ObjectiveParts {
    pub(crate) fn combine(self, alpha: f64, lambda: f64) -> f64 {
        self.residual + alpha * self.coupling - lambda * self.boundary
    }
}

fn check_shapes(z: &Matrix, state: &SolveState, s: &Matrix) -> Result<(), MatrixError> {
    let (m, n) = z.shape();
    let k = state.w.cols();
    let mismatch = |op, left, right| MatrixError::ShapeMismatch { op, left, right };
    if state.w.rows() != m {
        return Err(mismatch("objective (Z vs W)", z.shape(), state.w.shape()));
    }
    if state.p.shape() != (k, n) {
        return Err(mismatch("objective (W vs P)", state.w.shape(), state.p.shape()));
    }
    if s.shape() != (m, k) {
        return Err(mismatch("objective (W vs S)", state.w.shape(), s.shape()));
    }
    if let Some(f) = &state.f {
        if f.shape() != (m, k) {
            return Err(mismatch("objective (W vs F)", state.w.shape(), f.shape()));
        }
    }
    Ok(())
}

pub(crate) fn objective_parts(
    z: &Matrix,
    state: &SolveState,
    s: &Matrix,
) -> Result<ObjectiveParts, MatrixError> {
    check_shapes(z, state, s)?;
    Ok(ObjectiveParts {
        residual: residual_norm_sq(z, &state.w, &state.p)?,
        coupling: match &state.f {
            Some(f) => frobenius_dist_sq(&state.w, f)?,
            None => 0.0,
        },
        boundary: frobenius_dist_sq(&state.w, s)?,
    })
}

/// `J = ‖Z − WP‖²_F + α‖W − F‖²_F − λ‖W − S‖²_F`. A missing `F` contributes
/// nothing to the coupling term.
pub fn evaluate_objective(
    z: &Matrix,
    state: &SolveState,
    s: &Matrix,
    alpha: f64,
    lambda: f64,
) -> Result<f64, SolveError> {
    Ok(objective_parts(z, state, s)?.combine(alpha, lambda))
}

/// Nearest matrix with orthonormal columns to `a` (the polar factor `UVᵀ`).
///
/// Equivalently the maximizer of `trace(aᵀW)` over `WᵀW = I`. When `a` is
/// rank deficient the maximizer is not unique; the result then depends on
/// the SVD's deterministic completion and sign convention.
pub fn solve_procrustes(a: &Matrix) -> Result<Matrix, SolveError> {
    let (m, k) = a.shape();
    if m < k {
        return Err(SolveError::FrameTooWide { m, k });
    }
    let svd = thin_svd(a)?;
    Ok(matmul(&svd.u, &svd.vt)?)
}

/// `P = WᵀZ`, the minimizer of `‖Z − WP‖_F` for orthonormal `W`.
pub fn update_p(w: &Matrix, z: &Matrix) -> Result<Matrix, SolveError> {
    if w.rows() != z.rows() {
        return Err(MatrixError::ShapeMismatch {
            op: "update_p",
            left: w.shape(),
            right: z.shape(),
        }
        .into());
    }
    let residual = orthonormality_residual(w);
    if !(residual <= ORTHONORMAL_TOL) {
        return Err(SolveError::NotOrthonormal { residual });
    }
    Ok(matmul_tn(w, z)?)
}

/// Entrywise `max(w, 0)`; negative entries become exactly `+0.0`.
pub fn project_nonneg(w: &Matrix) -> Matrix {
    w.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Initial `(W, P, F)`.
///
/// `svd` mode takes the top-k left singular vectors of `Z`; `random` mode
/// takes the polar factor of a seeded Gaussian draw. `F` is the projection
/// of `W` (omitted for the variant without the non-negativity block) and
/// `P = WᵀZ`.
pub fn init_state(z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveState, SolveError> {
    let (m, n) = z.shape();
    let k = s.cols();
    if s.rows() != m {
        return Err(MatrixError::ShapeMismatch {
            op: "init_state (Z vs S)",
            left: z.shape(),
            right: s.shape(),
        }
        .into());
    }
    let max = m.min(n);
    if k > max {
        return Err(SolveError::RankOutOfRange { k, max });
    }
    let w = match config.init_mode {
        InitMode::Svd => truncated_svd(z, k)?.u,
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            solve_procrustes(&gaussian_matrix(m, k, &mut rng))?
        }
    };
    let f = (config.variant != Variant::NoNonneg).then(|| project_nonneg(&w));
    let p = update_p(&w, z)?;
    Ok(SolveState { w, p, f })
}
