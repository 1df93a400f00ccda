//! Planted-model data with known semantic directions, linear attribute
//! scorers, and a brute-force Procrustes oracle.
//!
//! The ground-truth basis `w_true` is non-negative with disjoint column
//! supports, so it is orthonormal by construction. Each attribute boundary
//! points against its direction (`s_true = −w_true`): pushing `W` away from
//! the boundaries and towards non-negative columns are then consistent
//! goals. The solver only ever sees a noisy copy of `s_true`.
//!
//! Latents are `Z = (w_true · mix · C + E) / √n` with `mix = (1 − ρ)I + ρ11ᵀ`,
//! standard normal codes `C` and entrywise `N(0, σ²)` noise `E`. The `1/√n`
//! keeps `ZZᵀ` at unit scale whatever the sample count, so the coupling and
//! boundary terms of the objective stay comparable to the reconstruction
//! term.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::boundary::{normalize_boundaries, BoundaryMatrix};
use crate::error::{MatrixError, SynthError};
use crate::matrix::{frobenius_inner, matmul, Matrix};
use crate::metrics::DeltaSet;
use crate::rng::{gaussian_matrix, stream};
use crate::svd::householder_qr;

/// Largest admissible planted coupling.
pub const MAX_RHO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedParams {
    /// Off-diagonal magnitude of the attribute coupling matrix.
    pub rho: f64,
    /// Entrywise standard deviation of the latent noise.
    pub noise_sigma: f64,
    /// Expected norm of the perturbation added to each unit boundary before
    /// it is handed to the solver.
    pub boundary_noise: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams { rho: 0.0, noise_sigma: 0.05, boundary_noise: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    pub w_true: Matrix,
    /// True boundaries, `−w_true` column by column.
    pub s_true: BoundaryMatrix,
    pub mix: Matrix,
    pub rho: f64,
    pub noise_sigma: f64,
    pub boundary_noise: f64,
    pub seed: u64,
}

impl PlantedModel {
    pub fn new(m: usize, k: usize, params: PlantedParams) -> Result<Self, SynthError> {
        if k == 0 || k > m {
            return Err(SynthError::Invalid(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
        }
        if !(0.0..=MAX_RHO).contains(&params.rho) {
            return Err(SynthError::Invalid(format!("rho must lie in [0, {MAX_RHO}], got {}", params.rho)));
        }
        for (name, v) in [("noise_sigma", params.noise_sigma), ("boundary_noise", params.boundary_noise)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::Invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(stream::MODEL);
        let mut rows: Vec<usize> = (0..m).collect();
        rows.shuffle(&mut rng);
        let support = m / k;
        let mut w = Matrix::zeros(m, k);
        for j in 0..k {
            let idx = &rows[j * support..(j + 1) * support];
            let mags: Vec<f64> = idx.iter().map(|_| 0.2 + rng.sample::<f64, _>(StandardNormal).abs()).collect();
            let norm = mags.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (&i, v) in idx.iter().zip(mags) {
                w.set(i, j, v / norm);
            }
        }
        let s_true = normalize_boundaries(&w.scale(-1.0), None)?;
        let rho = params.rho;
        let mix = Matrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho });
        Ok(PlantedModel {
            w_true: w,
            s_true,
            mix,
            rho,
            noise_sigma: params.noise_sigma,
            boundary_noise: params.boundary_noise,
            seed: params.seed,
        })
    }

    pub fn m(&self) -> usize {
        self.w_true.rows()
    }

    pub fn k(&self) -> usize {
        self.w_true.cols()
    }

    /// The scorers that read each attribute along its true boundary.
    pub fn scorers(&self) -> LinearScorer {
        LinearScorer {
            weights: self.s_true.matrix().clone(),
            bias: vec![0.0; self.k()],
            labels: self.s_true.labels().to_vec(),
        }
    }
}

/// Attribute `i` scores a latent `z` as `c_iᵀz + b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    /// Column `i` is the unit weight vector `c_i`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub labels: Vec<String>,
}

impl LinearScorer {
    /// Unit-normalizes the columns of `weights`; zero bias.
    pub fn from_weights(weights: &Matrix, labels: Option<Vec<String>>) -> Result<Self, SynthError> {
        let b = normalize_boundaries(weights, labels)?;
        let k = b.k();
        let (weights, labels) = b.into_parts();
        Ok(LinearScorer { weights, bias: vec![0.0; k], labels })
    }

    pub fn k(&self) -> usize {
        self.weights.cols()
    }

    /// Scores of every attribute for one latent vector.
    pub fn score(&self, z: &[f64]) -> Result<Vec<f64>, SynthError> {
        if z.len() != self.weights.rows() {
            return Err(SynthError::Invalid(format!(
                "latent length {} does not match scorer dimension {}",
                z.len(),
                self.weights.rows()
            )));
        }
        Ok((0..self.k())
            .map(|i| z.iter().enumerate().map(|(r, &v)| self.weights.get(r, i) * v).sum::<f64>() + self.bias[i])
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub z: Matrix,
    /// Noisy, re-normalized boundaries given to the solver.
    pub s: BoundaryMatrix,
    pub scorers: LinearScorer,
}

/// Draws `n` latent samples and the observed boundaries from `model`.
pub fn generate(model: &PlantedModel, n: usize) -> Result<SynthData, SynthError> {
    if n < 2 {
        return Err(SynthError::Invalid(format!("need at least 2 samples, got {n}")));
    }
    let (m, k) = (model.m(), model.k());
    let seeded = |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(s);
        rng
    };
    let codes = gaussian_matrix(k, n, &mut seeded(stream::CODES));
    let signal = matmul(&matmul(&model.w_true, &model.mix)?, &codes)?;
    let noise = gaussian_matrix(m, n, &mut seeded(stream::NOISE));
    let z = signal.add_scaled(model.noise_sigma, &noise)?.scale(1.0 / (n as f64).sqrt());

    let bnoise = gaussian_matrix(m, k, &mut seeded(stream::BOUNDARY_NOISE));
    let raw = model.s_true.matrix().add_scaled(model.boundary_noise / (m as f64).sqrt(), &bnoise)?;
    let s = normalize_boundaries(&raw, Some(model.s_true.labels().to_vec()))?;
    Ok(SynthData { z, s, scorers: model.scorers() })
}

/// Noise model for score differences.
///
/// A linear scorer gives every sample the same delta, which leaves nothing
/// to correlate. Each sample `t` therefore gets a gain `1 + ξ_t` shared by
/// all attributes (`ξ_t ~ N(0, gain_jitter²)`) plus independent per-attribute
/// noise `η ~ N(0, scorer_noise²)`. Two attributes then correlate in
/// proportion to how strongly the edit moves both of them, measured against
/// `scorer_noise / gain_jitter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaNoise {
    pub gain_jitter: f64,
    pub scorer_noise: f64,
    pub seed: u64,
}

impl Default for DeltaNoise {
    fn default() -> Self {
        DeltaNoise { gain_jitter: 1e-2, scorer_noise: 1e-3, seed: 0 }
    }
}

impl DeltaNoise {
    pub fn none() -> Self {
        DeltaNoise { gain_jitter: 0.0, scorer_noise: 0.0, seed: 0 }
    }
}

/// One [`DeltaSet`] per column of `w`: the differences
/// `score(z) − score(z + β·w_j)` over the `n` columns of `z`.
///
/// For linear scorers the difference is `−β·c_iᵀw_j` for every sample, so it
/// is evaluated in that closed form (with the noise of [`DeltaNoise`] scaled
/// by β as well). Doubling β therefore doubles each delta exactly.
pub fn score_deltas(
    z: &Matrix,
    w: &Matrix,
    scorers: &LinearScorer,
    beta: f64,
    noise: &DeltaNoise,
) -> Result<Vec<DeltaSet>, SynthError> {
    let m = scorers.weights.rows();
    for (op, other) in [("score_deltas (scorers vs Z)", z), ("score_deltas (scorers vs W)", w)] {
        if other.rows() != m {
            return Err(MatrixError::ShapeMismatch { op, left: scorers.weights.shape(), right: other.shape() }.into());
        }
    }
    if !(beta != 0.0 && beta.is_finite()) {
        return Err(SynthError::Invalid(format!("beta must be finite and non-zero, got {beta}")));
    }
    let n = z.cols();
    let ka = scorers.k();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(stream::SCORER_NOISE);
    let mut out = Vec::with_capacity(w.cols());
    for j in 0..w.cols() {
        let leak: Vec<f64> = (0..ka)
            .map(|i| (0..m).map(|r| scorers.weights.get(r, i) * w.get(r, j)).sum())
            .collect();
        let mut deltas = vec![Vec::with_capacity(n); ka];
        for _ in 0..n {
            let gain = 1.0 + noise.gain_jitter * rng.sample::<f64, _>(StandardNormal);
            for (i, d) in deltas.iter_mut().enumerate() {
                let eta = noise.scorer_noise * rng.sample::<f64, _>(StandardNormal);
                d.push(-beta * (gain * leak[i] + eta));
            }
        }
        out.push(DeltaSet::new(scorers.labels.clone(), deltas).map_err(|e| SynthError::Invalid(e.to_string()))?);
    }
    Ok(out)
}

/// Haar-distributed `m x k` orthonormal frame: QR of a Gaussian draw with
/// the signs of `R`'s diagonal moved into `Q`.
pub fn haar_frame<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(m, k, rng);
    let (mut q, r) = householder_qr(&g);
    for j in 0..k {
        if r.get(j, j) < 0.0 {
            q.negate_column(j);
        }
    }
    q
}

/// Best `trace(aᵀQ)` over `trials` Haar-random frames. A lower bound on the
/// Procrustes optimum.
pub fn brute_force_procrustes(a: &Matrix, trials: usize, seed: u64) -> Result<(Matrix, f64), SynthError> {
    let (m, k) = a.shape();
    if m < k || trials == 0 {
        return Err(SynthError::Invalid(format!("need m >= k and trials >= 1, got {m}x{k}, {trials} trials")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream::HAAR);
    let mut best: Option<(Matrix, f64)> = None;
    for _ in 0..trials {
        let q = haar_frame(m, k, &mut rng);
        let v = frobenius_inner(a, &q)?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((q, v));
        }
    }
    Ok(best.expect("trials >= 1"))
}
