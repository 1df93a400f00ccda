//! Thin and truncated SVD.
//!
//! Tall inputs are first reduced with a Householder QR so the one-sided
//! (Hestenes) Jacobi iteration only ever runs on the small `r x r` factor,
//! `r = min(rows, cols)`. Wide inputs are handled through their transpose.
//!
//! Output is canonicalized: singular values non-increasing (stable on ties),
//! and each singular pair is flipped so the largest-magnitude entry of the
//! `u` column is positive, lowest row index winning ties.

use crate::error::SvdError;
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 80;
/// Relative off-diagonal threshold for a Jacobi rotation.
const ROTATION_TOL: f64 = 1e-15;
/// Singular values at or below this fraction of `σ_max` get a completed
/// left vector instead of a normalized one. They are still reported.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    /// `m x r`, orthonormal columns.
    pub u: Matrix,
    /// Length `r`, non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `r x c`, orthonormal rows.
    pub vt: Matrix,
}

impl ThinSvd {
    pub fn rank_width(&self) -> usize {
        self.singular_values.len()
    }

    /// `u · diag(σ) · vt`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, r) = self.u.shape();
        let c = self.vt.cols();
        let mut out = vec![0.0; m * c];
        for i in 0..m {
            for l in 0..r {
                let coef = self.u.get(i, l) * self.singular_values[l];
                if coef == 0.0 {
                    continue;
                }
                for j in 0..c {
                    out[i * c + j] += coef * self.vt.get(l, j);
                }
            }
        }
        Matrix::from_raw(m, c, out)
    }

    /// Keeps the leading `k` singular triplets.
    pub fn truncate(&self, k: usize) -> Result<ThinSvd, SvdError> {
        let r = self.rank_width();
        if k == 0 || k > r {
            return Err(SvdError::RankOutOfRange { k, max: r });
        }
        Ok(ThinSvd {
            u: self.u.first_columns(k),
            singular_values: self.singular_values[..k].to_vec(),
            vt: self.vt.first_rows(k),
        })
    }
}

pub fn thin_svd(a: &Matrix) -> Result<ThinSvd, SvdError> {
    let (m, c) = a.shape();
    let (mut u, sigma, mut v) = if m >= c {
        tall_svd(a)?
    } else {
        let (u_t, s, v_t) = tall_svd(&a.transpose())?;
        (v_t, s, u_t)
    };
    apply_sign_convention(&mut u, &mut v);
    Ok(ThinSvd {
        u,
        singular_values: sigma,
        vt: v.transpose(),
    })
}

pub fn truncated_svd(a: &Matrix, k: usize) -> Result<ThinSvd, SvdError> {
    let max = a.rows().min(a.cols());
    if k == 0 || k > max {
        return Err(SvdError::RankOutOfRange { k, max });
    }
    thin_svd(a)?.truncate(k)
}

/// SVD of a tall matrix (`rows >= cols`); returns `(u, σ, v)` with `v` square.
fn tall_svd(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), SvdError> {
    let (m, c) = a.shape();
    if m == c {
        return jacobi_svd(a);
    }
    let (q, r) = householder_qr(a);
    let (ur, sigma, v) = jacobi_svd(&r)?;
    let u = crate::matrix::matmul(&q, &ur).expect("q is m x c and ur is c x c");
    Ok((u, sigma, v))
}

/// Thin Householder QR of a tall matrix: `a = q r`, `q` is `m x c`, `r` is `c x c`.
pub(crate) fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, c) = a.shape();
    let mut work = a.as_slice().to_vec();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(c);

    for j in 0..c {
        let mut norm_sq = 0.0;
        for i in j..m {
            let x = work[i * c + j];
            norm_sq += x * x;
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = work[j * c + j];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| work[i * c + j]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        // work[j.., j..] -= 2 v (vᵀ work[j.., j..])
        for col in j..c {
            let mut dot = 0.0;
            for (t, vi) in v.iter().enumerate() {
                dot += vi * work[(j + t) * c + col];
            }
            let f = 2.0 * dot;
            for (t, vi) in v.iter().enumerate() {
                work[(j + t) * c + col] -= f * vi;
            }
        }
        reflectors.push(Some(v));
    }

    let mut r = vec![0.0; c * c];
    for i in 0..c {
        for j in i..c {
            r[i * c + j] = work[i * c + j];
        }
    }

    // q = H_0 H_1 ... H_{c-1} [I_c; 0]
    let mut q = vec![0.0; m * c];
    for i in 0..c {
        q[i * c + i] = 1.0;
    }
    for (j, refl) in reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        for col in 0..c {
            let mut dot = 0.0;
            for (t, vi) in v.iter().enumerate() {
                dot += vi * q[(j + t) * c + col];
            }
            let f = 2.0 * dot;
            for (t, vi) in v.iter().enumerate() {
                q[(j + t) * c + col] -= f * vi;
            }
        }
    }
    (Matrix::from_raw(m, c, q), Matrix::from_raw(c, c, r))
}

/// One-sided Jacobi on a tall-or-square matrix. Columns are stored
/// contiguously during the sweeps for cache-friendly rotations.
fn jacobi_svd(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), SvdError> {
    let (m, c) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..c).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..c)
        .map(|j| {
            let mut e = vec![0.0; c];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = c < 2;
    let mut last_residual = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        last_residual = 0.0_f64;
        for p in 0..c {
            for q in (p + 1)..c {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a_ = 0.0;
                    let mut b_ = 0.0;
                    let mut g_ = 0.0;
                    for i in 0..m {
                        a_ += cp[i] * cp[i];
                        b_ += cq[i] * cq[i];
                        g_ += cp[i] * cq[i];
                    }
                    (a_, b_, g_)
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let scale = (alpha * beta).sqrt();
                let rel = gamma.abs() / scale;
                last_residual = last_residual.max(rel);
                if rel <= ROTATION_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(&mut cols, p, q, cs, sn);
                rotate(&mut vcols, p, q, cs, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SvdError::NoConvergence {
            sweeps: MAX_SWEEPS,
            residual: last_residual,
        });
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..c).collect();
    // stable: equal values keep column order
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite norms"));

    let sigma_max = norms[order[0]];
    let cutoff = RANK_TOL * sigma_max;
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    let mut ucols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            (s > cutoff && s > 0.0).then(|| cols[j].iter().map(|x| x / s).collect())
        })
        .collect();
    complete_orthonormal(&mut ucols, m);

    let u = columns_to_matrix(
        m,
        ucols.into_iter().map(|c| c.expect("completed")).collect(),
    );
    let v = columns_to_matrix(c, order.iter().map(|&j| vcols[j].clone()).collect());
    Ok((u, sigma, v))
}

#[inline]
fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, cs: f64, sn: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = cs * xp - sn * xq;
        *y = sn * xp + cs * xq;
    }
}

/// Fills `None` slots with unit vectors orthogonal to every other column,
/// trying standard basis vectors in index order.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], m: usize) {
    let missing: Vec<usize> = (0..cols.len()).filter(|&j| cols[j].is_none()).collect();
    let mut candidate = 0usize;
    for slot in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal frame");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let d: f64 = other.iter().zip(&e).map(|(a, b)| a * b).sum();
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= d * o;
                    }
                }
            }
            let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.5 {
                for x in &mut e {
                    *x /= n;
                }
                cols[slot] = Some(e);
                break;
            }
        }
    }
}

fn columns_to_matrix(rows: usize, cols: Vec<Vec<f64>>) -> Matrix {
    let c = cols.len();
    let mut data = vec![0.0; rows * c];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * c + j] = *v;
        }
    }
    Matrix::from_raw(rows, c, data)
}

fn apply_sign_convention(u: &mut Matrix, v: &mut Matrix) {
    for j in 0..u.cols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..u.rows() {
            let a = u.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if u.get(best, j) < 0.0 {
            u.negate_column(j);
            v.negate_column(j);
        }
    }
}
