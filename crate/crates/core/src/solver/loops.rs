use crate::error::{MatrixError, SolveError};
use crate::matrix::{
    cholesky_solve, frobenius_dist_sq, matmul_nt, matmul_tn, orthonormality_residual,
    residual_norm_sq, Matrix,
};
use crate::svd::truncated_svd;

use super::{
    init_state, objective_parts, project_nonneg, solve_procrustes, update_p, ObjectiveParts,
    SolveResult, SolveState, SolveTrace, SolverConfig, TraceRecord, Variant,
};

/// Ridge added to `WᵀW` when the normal equations are singular.
pub const RIDGE: f64 = 1e-10;

/// Alternating closed-form minimization, updating W → P → F each iteration.
///
/// The variant field of `config` is ignored here: this is always the
/// full loop with the given `α` and `λ` (so `α > 0` is required).
pub fn aidc_solve(z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let cfg = SolverConfig { variant: Variant::Full, ..*config }.effective()?;
    run_stiefel(z, s, &cfg)
}

/// Closed-form minimizer of `‖Z − WP‖²_F` under `‖W‖_F = 1`: the top-k
/// singular triplets with the scale moved into `P`.
pub fn solve_baseline(z: &Matrix, k: usize) -> Result<SolveState, SolveError> {
    let svd = truncated_svd(z, k)?;
    let root_k = (k as f64).sqrt();
    let w = svd.u.scale(1.0 / root_k);
    let n = z.cols();
    let p = Matrix::from_fn(k, n, |i, j| root_k * svd.singular_values[i] * svd.vt.get(i, j));
    let f = Some(project_nonneg(&w));
    Ok(SolveState { w, p, f })
}

fn record(
    iteration: usize,
    objective: f64,
    state: &SolveState,
    rel_drop: f64,
    block_objectives: Vec<f64>,
) -> TraceRecord {
    TraceRecord {
        iteration,
        objective,
        ortho_residual: orthonormality_residual(&state.w),
        min_f: state.f.as_ref().map(Matrix::min_entry),
        rel_drop,
        block_objectives,
    }
}

fn finite(j: f64, iteration: usize) -> Result<f64, SolveError> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(SolveError::Divergence { iteration })
    }
}

/// `ZPᵀ + αF − λS`, the target of the W-update.
fn w_target(z: &Matrix, state: &SolveState, s: &Matrix, alpha: f64, lambda: f64) -> Result<Matrix, MatrixError> {
    let mut a = matmul_nt(z, &state.p)?;
    if let Some(f) = &state.f {
        a = a.add_scaled(alpha, f)?;
    }
    a.add_scaled(-lambda, s)
}

fn rel_drop(prev: f64, next: f64) -> f64 {
    (prev - next).abs() / prev.abs().max(1.0)
}

/// Loop shared by full, no_boundary and no_nonneg: `W` stays on the Stiefel
/// manifold and the F block runs only when the state carries an `F`.
pub(crate) fn run_stiefel(z: &Matrix, s: &Matrix, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let (alpha, lambda) = (cfg.alpha, cfg.lambda);
    let mut state = init_state(z, s, cfg)?;
    let mut parts = objective_parts(z, &state, s)?;
    let mut j = finite(parts.combine(alpha, lambda), 0)?;
    let mut trace = SolveTrace::default();
    trace.records.push(record(0, j, &state, 0.0, Vec::new()));

    let mut converged = false;
    let mut iterations_run = 0;
    for t in 1..=cfg.max_iters {
        let mut blocks = Vec::with_capacity(3);

        state.w = solve_procrustes(&w_target(z, &state, s, alpha, lambda)?)?;
        parts = objective_parts(z, &state, s)?;
        blocks.push(finite(parts.combine(alpha, lambda), t)?);

        state.p = update_p(&state.w, z)?;
        parts.residual = residual_norm_sq(z, &state.w, &state.p)?;
        blocks.push(finite(parts.combine(alpha, lambda), t)?);

        if state.f.is_some() {
            let f = project_nonneg(&state.w);
            parts.coupling = frobenius_dist_sq(&state.w, &f)?;
            state.f = Some(f);
            blocks.push(finite(parts.combine(alpha, lambda), t)?);
        }

        let next = *blocks.last().expect("at least two blocks");
        let drop = rel_drop(j, next);
        trace.records.push(record(t, next, &state, drop, blocks));
        iterations_run = t;
        j = next;
        if drop < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult { state, trace, converged, iterations_run })
}

/// Column-normalized W with P from the normal equations, since `WᵀW ≠ I`.
pub(crate) fn run_unconstrained(z: &Matrix, s: &Matrix, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let (alpha, lambda) = (cfg.alpha, cfg.lambda);
    let mut state = init_state(z, s, cfg)?;
    let mut j = finite(objective_parts(z, &state, s)?.combine(alpha, lambda), 0)?;
    let mut trace = SolveTrace::default();
    trace.records.push(record(0, j, &state, 0.0, Vec::new()));

    let mut converged = false;
    let mut iterations_run = 0;
    for t in 1..=cfg.max_iters {
        let mut blocks = Vec::with_capacity(3);

        state.w = normalize_columns(&w_target(z, &state, s, alpha, lambda)?)?;
        blocks.push(finite(objective(z, &state, s, alpha, lambda)?, t)?);

        let gram = matmul_tn(&state.w, &state.w)?;
        let rhs = matmul_tn(&state.w, z)?;
        state.p = match cholesky_solve(&gram, &rhs) {
            Some(p) => p,
            None => {
                trace.ridge_warning = true;
                let k = gram.rows();
                let ridged = gram.add_scaled(RIDGE, &Matrix::identity(k))?;
                cholesky_solve(&ridged, &rhs).ok_or(SolveError::Divergence { iteration: t })?
            }
        };
        blocks.push(finite(objective(z, &state, s, alpha, lambda)?, t)?);

        state.f = Some(project_nonneg(&state.w));
        blocks.push(finite(objective(z, &state, s, alpha, lambda)?, t)?);

        let next = blocks[2];
        let drop = rel_drop(j, next);
        trace.records.push(record(t, next, &state, drop, blocks));
        iterations_run = t;
        j = next;
        if drop < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult { state, trace, converged, iterations_run })
}

fn objective(z: &Matrix, state: &SolveState, s: &Matrix, alpha: f64, lambda: f64) -> Result<f64, MatrixError> {
    objective_parts(z, state, s).map(|p: ObjectiveParts| p.combine(alpha, lambda))
}

fn normalize_columns(a: &Matrix) -> Result<Matrix, SolveError> {
    let norms = a.column_norms();
    if let Some(column) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(SolveError::ZeroColumn { column });
    }
    Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) / norms[j]))
}

/// Wraps the baseline state as a one-record result so it can sit in the
/// registry next to the iterative solvers. The recorded objective is the
/// plain reconstruction error.
pub(crate) fn baseline_result(z: &Matrix, s: &Matrix) -> Result<SolveResult, SolveError> {
    if s.rows() != z.rows() {
        return Err(MatrixError::ShapeMismatch {
            op: "baseline (Z vs S)",
            left: z.shape(),
            right: s.shape(),
        }
        .into());
    }
    let k = s.cols();
    let max = z.rows().min(z.cols());
    if k > max {
        return Err(SolveError::RankOutOfRange { k, max });
    }
    let state = solve_baseline(z, k)?;
    let j = finite(residual_norm_sq(z, &state.w, &state.p)?, 0)?;
    let trace = SolveTrace {
        records: vec![record(0, j, &state, 0.0, Vec::new())],
        ridge_warning: false,
    };
    Ok(SolveResult { state, trace, converged: true, iterations_run: 0 })
}
