//! Seeded sampling helpers. Every draw goes through `ChaCha8Rng` so output is
//! a pure function of the seed on every platform.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;

/// Independent streams carved out of one user seed.
pub(crate) mod stream {
    pub const MODEL: u64 = 1;
    pub const CODES: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const BOUNDARY_NOISE: u64 = 4;
    pub const SCORER_NOISE: u64 = 5;
    pub const HAAR: u64 = 6;
}

/// Row-major `rows x cols` matrix of standard normal draws.
pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_raw(rows, cols, data)
}
