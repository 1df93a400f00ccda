//! Attribute boundary normals and latent edits along semantic directions.

use crate::error::BoundaryError;
use crate::matrix::{frobenius_dist_sq, CompensatedSum, Matrix};

/// Columns are unit boundary normals, one per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMatrix {
    s: Matrix,
    labels: Vec<String>,
}

impl BoundaryMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.s.cols()
    }

    pub fn into_parts(self) -> (Matrix, Vec<String>) {
        (self.s, self.labels)
    }
}

/// `attr0, attr1, …`
pub fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("attr{i}")).collect()
}

/// Scales every column of `raw` to unit length. Labels attach to columns by
/// position; `None` uses [`default_labels`].
pub fn normalize_boundaries(raw: &Matrix, labels: Option<Vec<String>>) -> Result<BoundaryMatrix, BoundaryError> {
    let k = raw.cols();
    let labels = labels.unwrap_or_else(|| default_labels(k));
    if labels.len() != k {
        return Err(BoundaryError::LabelCount { expected: k, got: labels.len() });
    }
    let norms = raw.column_norms();
    if let Some(column) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(BoundaryError::ZeroColumn { label: labels[column].clone(), column });
    }
    let s = Matrix::from_fn(raw.rows(), k, |i, j| raw.get(i, j) / norms[j]);
    Ok(BoundaryMatrix { s, labels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDistance {
    /// `‖w_i − s_i‖²` per attribute.
    pub per_attribute: Vec<f64>,
    /// `‖W − S‖²_F`.
    pub total: f64,
}

pub fn boundary_distance(w: &Matrix, s: &BoundaryMatrix) -> Result<BoundaryDistance, BoundaryError> {
    let total = frobenius_dist_sq(w, &s.s)?;
    let per_attribute = (0..w.cols())
        .map(|j| {
            let mut acc = CompensatedSum::default();
            for i in 0..w.rows() {
                let d = w.get(i, j) - s.s.get(i, j);
                acc.add(d * d);
            }
            acc.value()
        })
        .collect();
    Ok(BoundaryDistance { per_attribute, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditRequest {
    pub z: Vec<f64>,
    pub direction_index: usize,
    pub beta: f64,
}

/// `z + β·w_index`.
pub fn apply_edit(req: &EditRequest, w: &Matrix) -> Result<Vec<f64>, BoundaryError> {
    let k = w.cols();
    if req.direction_index >= k {
        return Err(BoundaryError::IndexOutOfRange { index: req.direction_index, k });
    }
    if req.z.len() != w.rows() {
        return Err(BoundaryError::LengthMismatch { expected: w.rows(), got: req.z.len() });
    }
    Ok(req
        .z
        .iter()
        .enumerate()
        .map(|(i, &zi)| zi + req.beta * w.get(i, req.direction_index))
        .collect())
}

/// Tolerance on the unit-norm precondition of [`controllability_check`].
pub const UNIT_TOL: f64 = 1e-8;

fn norm(v: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in v {
        acc.add(x * x);
    }
    acc.value().sqrt()
}

/// `‖β·w − s‖₂` for each β, sorted by β.
///
/// For unit `w` and `s` this distance grows strictly with β once β > 1; the
/// inequality can fail for other norms, so both are required to be unit.
pub fn controllability_check(w_col: &[f64], s_col: &[f64], betas: &[f64]) -> Result<Vec<(f64, f64)>, BoundaryError> {
    if w_col.len() != s_col.len() {
        return Err(BoundaryError::LengthMismatch { expected: w_col.len(), got: s_col.len() });
    }
    for (which, v) in [("direction", w_col), ("boundary", s_col)] {
        let n = norm(v);
        if !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(BoundaryError::NotUnit { which, norm: n });
        }
    }
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .into_iter()
        .map(|beta| {
            let d: Vec<f64> = w_col.iter().zip(s_col).map(|(w, s)| beta * w - s).collect();
            (beta, norm(&d))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::frobenius_norm_sq;
    use proptest::prelude::*;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn unit_columns_unchanged() {
        let raw = Matrix::identity(4).first_columns(2);
        let b = normalize_boundaries(&raw, None).unwrap();
        assert!(b.matrix().max_abs_diff(&raw) < 1e-12);
        assert_eq!(b.labels(), ["attr0", "attr1"]);
    }

    #[test]
    fn three_four_five() {
        let raw = Matrix::from_columns(&[vec![3.0, 4.0, 0.0, 0.0]]).unwrap();
        let b = normalize_boundaries(&raw, Some(vec!["smile".into()])).unwrap();
        assert_eq!(b.matrix().column(0), vec![0.6, 0.8, 0.0, 0.0]);
    }

    #[test]
    fn zero_column_names_attribute() {
        let raw = Matrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let err = normalize_boundaries(&raw, Some(vec!["age".into(), "gender".into()])).unwrap_err();
        assert!(err.to_string().contains("gender"));
        assert!(matches!(
            normalize_boundaries(&raw, Some(vec!["a".into()])),
            Err(BoundaryError::LabelCount { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn distance_examples() {
        let s = normalize_boundaries(&Matrix::identity(3), None).unwrap();
        let d = boundary_distance(s.matrix(), &s).unwrap();
        assert_eq!(d.per_attribute, vec![0.0; 3]);
        assert_eq!(d.total, 0.0);

        let s = normalize_boundaries(&Matrix::identity(2).first_columns(1), None).unwrap();
        let w = Matrix::from_columns(&[vec![0.0, 1.0]]).unwrap();
        let d = boundary_distance(&w, &s).unwrap();
        assert!((d.per_attribute[0] - 2.0).abs() < 1e-15);
        assert!(boundary_distance(&Matrix::zeros(3, 1), &s).is_err());
    }

    #[test]
    fn edit_examples() {
        let w = Matrix::identity(3);
        let z = vec![0.5, -1.0, 2.0];
        let req = |beta| EditRequest { z: z.clone(), direction_index: 1, beta };
        assert_eq!(apply_edit(&req(0.0), &w).unwrap(), z);
        let up = apply_edit(&req(1.0), &w).unwrap();
        let back = apply_edit(&EditRequest { z: up, direction_index: 1, beta: -1.0 }, &w).unwrap();
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        let out = apply_edit(&EditRequest { z: vec![0.0; 3], direction_index: 2, beta: 2.0 }, &w).unwrap();
        assert!((norm(&out) - 2.0).abs() < 1e-12);
        assert!(matches!(
            apply_edit(&EditRequest { z, direction_index: 3, beta: 1.0 }, &w),
            Err(BoundaryError::IndexOutOfRange { index: 3, k: 3 })
        ));
    }

    #[test]
    fn controllability_examples() {
        let w = unit(vec![1.0, 2.0, -0.5]);
        let s = unit(vec![0.3, -1.0, 0.2]);
        let out = controllability_check(&w, &s, &[1.0]).unwrap();
        let direct = norm(&w.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert_eq!(out, vec![(1.0, direct)]);
        let same = controllability_check(&s, &s, &[2.0]).unwrap();
        assert!((same[0].1 - 1.0).abs() < 1e-15);
        let sorted = controllability_check(&w, &s, &[2.0, 1.0, 1.5]).unwrap();
        assert_eq!(sorted.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1.0, 1.5, 2.0]);
        assert!(sorted[1].1 > sorted[0].1);
    }

    #[test]
    fn controllability_requires_unit_vectors() {
        let s = unit(vec![1.0, 1.0]);
        let err = controllability_check(&[2.0, 0.0], &s, &[1.5]).unwrap_err();
        assert!(matches!(err, BoundaryError::NotUnit { which: "direction", .. }));
        assert!(controllability_check(&s, &[0.0, 0.5], &[1.5]).is_err());
        assert!(controllability_check(&s, &[1.0], &[1.5]).is_err());
    }

    fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, len).prop_filter("non-zero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn distance_grows_with_beta(w in vec_strategy(6), s in vec_strategy(6), b1 in 1.0001f64..4.0, gap in 1e-3f64..4.0) {
            let (w, s) = (unit(w), unit(s));
            let out = controllability_check(&w, &s, &[b1, b1 + gap]).unwrap();
            prop_assert!(out[0].1 < out[1].1);
        }

        #[test]
        fn edit_is_linear_in_beta(z in vec_strategy(5), b1 in -3.0f64..3.0, b2 in -3.0f64..3.0, idx in 0usize..3) {
            let w = Matrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64).sin());
            let edit = |beta| apply_edit(&EditRequest { z: z.clone(), direction_index: idx, beta }, &w).unwrap();
            let (e1, e2, e12) = (edit(b1), edit(b2), edit(b1 + b2));
            for i in 0..5 {
                prop_assert!((e1[i] + e2[i] - z[i] - e12[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn normalized_columns_are_unit(data in prop::collection::vec(-5.0f64..5.0, 12)) {
            let raw = Matrix::new(4, 3, data).unwrap();
            prop_assume!(raw.column_norms().iter().all(|&n| n > 1e-6));
            let b = normalize_boundaries(&raw, None).unwrap();
            for n in b.matrix().column_norms() {
                prop_assert!((n - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn total_distance_is_frobenius_identity(wd in prop::collection::vec(-1.0f64..1.0, 8), sd in vec_strategy(8)) {
            let w = Matrix::new(4, 2, wd).unwrap();
            prop_assume!(Matrix::new(4, 2, sd.clone()).unwrap().column_norms().iter().all(|&n| n > 1e-3));
            let s = normalize_boundaries(&Matrix::new(4, 2, sd).unwrap(), None).unwrap();
            let d = boundary_distance(&w, &s).unwrap();
            let direct = frobenius_norm_sq(&w.sub(s.matrix()).unwrap());
            prop_assert!((d.total - direct).abs() < 1e-10);
            prop_assert!((d.total - d.per_attribute.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}
