//! Disentanglement correlation, identity consistency and trace summaries.

use crate::error::MetricsError;
use crate::matrix::{CompensatedSum, Matrix};
use crate::solver::SolveTrace;

/// Per-attribute score differences over the same `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSet {
    labels: Vec<String>,
    deltas: Vec<Vec<f64>>,
}

impl DeltaSet {
    pub fn new(labels: Vec<String>, deltas: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        if labels.len() != deltas.len() {
            return Err(MetricsError::LengthMismatch { left: labels.len(), right: deltas.len() });
        }
        let n = deltas.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(MetricsError::TooFewSamples(n));
        }
        for (label, d) in labels.iter().zip(&deltas) {
            if d.len() != n {
                return Err(MetricsError::LengthMismatch { left: n, right: d.len() });
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(MetricsError::NonFinite(label.clone()));
            }
        }
        Ok(DeltaSet { labels, deltas })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn deltas(&self) -> &[Vec<f64>] {
        &self.deltas
    }

    pub fn k(&self) -> usize {
        self.deltas.len()
    }

    pub fn n(&self) -> usize {
        self.deltas[0].len()
    }
}

fn mean(x: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &v in x {
        acc.add(v);
    }
    acc.value() / x.len() as f64
}

/// `|cov(x, y)| / (σ_x σ_y)` with population (divide-by-n) moments.
pub fn pearson_abs(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Err(MetricsError::ConstantSequence);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let nf = n as f64;
    let (cov, vx, vy) = (sxy.value() / nf, sxx.value() / nf, syy.value() / nf);
    if !(vx > 0.0 && vy > 0.0) {
        return Err(MetricsError::ConstantSequence);
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).abs().min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub labels: Vec<String>,
    /// Absolute correlations; the diagonal holds 1.
    pub matrix: Matrix,
    /// Column means over the off-diagonal entries.
    pub column_averages: Vec<f64>,
    /// Mean over all off-diagonal entries.
    pub overall: f64,
}

fn pair_error(labels: &[String], i: usize, j: usize, e: MetricsError) -> MetricsError {
    MetricsError::Pair {
        left: labels[i].clone(),
        right: labels[j].clone(),
        source: Box::new(e),
    }
}

/// Pairwise [`pearson_abs`] over the attributes of `deltas`.
pub fn correlation_matrix(deltas: &DeltaSet) -> Result<CorrelationReport, MetricsError> {
    let k = deltas.k();
    if k < 2 {
        return Err(MetricsError::TooFewAttributes(k));
    }
    let mut m = Matrix::identity(k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r = pearson_abs(&deltas.deltas[i], &deltas.deltas[j])
                .map_err(|e| pair_error(&deltas.labels, i, j, e))?;
            m.set(i, j, r);
            m.set(j, i, r);
        }
    }
    let column_averages = (0..k)
        .map(|j| (0..k).filter(|&i| i != j).map(|i| m.get(i, j)).sum::<f64>() / (k - 1) as f64)
        .collect::<Vec<_>>();
    let overall = column_averages.iter().sum::<f64>() / k as f64;
    Ok(CorrelationReport { labels: deltas.labels.clone(), matrix: m, column_averages, overall })
}

/// Like [`CorrelationReport`], but attributes whose deltas are constant are
/// kept as undefined entries instead of failing the whole table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Option<f64>>>,
    pub column_averages: Vec<Option<f64>>,
    pub overall: Option<f64>,
    /// Labels of the attributes with undefined correlations.
    pub undefined: Vec<String>,
}

pub fn correlation_table(deltas: &DeltaSet) -> Result<CorrelationTable, MetricsError> {
    let k = deltas.k();
    if k < 2 {
        return Err(MetricsError::TooFewAttributes(k));
    }
    let constant: Vec<bool> = deltas.deltas.iter().map(|d| d.iter().all(|&v| v == d[0])).collect();
    let mut entries = vec![vec![None; k]; k];
    for i in 0..k {
        if !constant[i] {
            entries[i][i] = Some(1.0);
        }
        for j in (i + 1)..k {
            if constant[i] || constant[j] {
                continue;
            }
            let r = match pearson_abs(&deltas.deltas[i], &deltas.deltas[j]) {
                Ok(r) => Some(r),
                Err(MetricsError::ConstantSequence) => None,
                Err(e) => return Err(pair_error(&deltas.labels, i, j, e)),
            };
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    let column_averages: Vec<Option<f64>> = (0..k)
        .map(|j| {
            let vals: Vec<f64> = (0..k).filter(|&i| i != j).filter_map(|i| entries[i][j]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let off: Vec<f64> = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter_map(|(i, j)| entries[i][j])
        .collect();
    let overall = (!off.is_empty()).then(|| off.iter().sum::<f64>() / off.len() as f64);
    let undefined = (0..k)
        .filter(|&i| (0..k).filter(|&j| j != i).any(|j| entries[i][j].is_none()))
        .map(|i| deltas.labels[i].clone())
        .collect();
    Ok(CorrelationTable { labels: deltas.labels.clone(), entries, column_averages, overall, undefined })
}

/// Tolerance on the unit-norm requirement for embeddings.
pub const EMBEDDING_UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    e_ori: Vec<f64>,
    e_edit: Vec<f64>,
}

impl EmbeddingPair {
    pub fn new(e_ori: Vec<f64>, e_edit: Vec<f64>) -> Result<Self, MetricsError> {
        if e_ori.len() != e_edit.len() {
            return Err(MetricsError::LengthMismatch { left: e_ori.len(), right: e_edit.len() });
        }
        for e in [&e_ori, &e_edit] {
            let mut acc = CompensatedSum::default();
            for v in e {
                acc.add(v * v);
            }
            let n = acc.value().sqrt();
            if !((n - 1.0).abs() <= EMBEDDING_UNIT_TOL) {
                return Err(MetricsError::NotUnit(n));
            }
        }
        Ok(EmbeddingPair { e_ori, e_edit })
    }
}

/// `1 − ⟨e_ori, e_edit⟩`, in `[0, 2]`; lower means better preserved identity.
pub fn identity_score(pair: &EmbeddingPair) -> f64 {
    let mut acc = CompensatedSum::default();
    for (a, b) in pair.e_ori.iter().zip(&pair.e_edit) {
        acc.add(a * b);
    }
    (1.0 - acc.value()).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub initial: f64,
    pub final_objective: f64,
    /// `initial − final`.
    pub total_drop: f64,
    /// Largest `J_{t+1} − J_t` between recorded iterations; 0 for a
    /// single-record trace.
    pub max_increase: f64,
    /// Same, taken over every block update inside each iteration.
    pub max_block_increase: f64,
}

pub fn trace_summary(trace: &SolveTrace) -> Result<TraceSummary, MetricsError> {
    let first = trace.records.first().ok_or(MetricsError::EmptyTrace)?;
    let last = trace.records.last().expect("non-empty");
    let steps = |seq: &[f64]| {
        seq.windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
            .unwrap_or(0.0)
    };
    let outer: Vec<f64> = trace.records.iter().map(|r| r.objective).collect();
    let mut inner = vec![first.objective];
    for r in &trace.records[1..] {
        if r.block_objectives.is_empty() {
            inner.push(r.objective);
        } else {
            inner.extend_from_slice(&r.block_objectives);
        }
    }
    Ok(TraceSummary {
        initial: first.objective,
        final_objective: last.objective,
        total_drop: first.objective - last.objective,
        max_increase: steps(&outer),
        max_block_increase: steps(&inner),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TraceRecord;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn labels(k: usize) -> Vec<String> {
        crate::boundary::default_labels(k)
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson_abs(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_abs(&x, &neg).unwrap() - 1.0).abs() < 1e-15);
        let r = pearson_abs(&x, &[1.0, 1.0, 2.0]).unwrap();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson_abs(&[1.0, 2.0], &[3.0, 3.0]), Err(MetricsError::ConstantSequence));
        assert_eq!(pearson_abs(&[0.1; 3], &[1.0, 2.0, 4.0]), Err(MetricsError::ConstantSequence));
        assert!(matches!(pearson_abs(&[1.0], &[2.0]), Err(MetricsError::TooFewSamples(1))));
        assert!(matches!(pearson_abs(&[1.0, 2.0], &[2.0]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn identical_columns_correlate_fully() {
        let d = vec![1.0, 4.0, 2.0, 8.0];
        let r = correlation_matrix(&DeltaSet::new(labels(2), vec![d.clone(), d]).unwrap()).unwrap();
        assert_eq!(r.matrix.get(0, 1), 1.0);
        assert_eq!(r.column_averages, vec![1.0, 1.0]);
        assert_eq!(r.overall, 1.0);
    }

    #[test]
    fn pinned_pair_averages() {
        let r = correlation_matrix(&DeltaSet::new(labels(2), vec![vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 2.0]]).unwrap()).unwrap();
        let want = 3f64.sqrt() / 2.0;
        for a in r.column_averages {
            assert!((a - want).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_attribute_averages_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.5 * { let e: f64 = StandardNormal.sample(&mut rng); e }).collect();
        let c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = correlation_matrix(&DeltaSet::new(labels(3), vec![a, b, c]).unwrap()).unwrap();
        assert!(r.column_averages[2] < 0.1, "{}", r.column_averages[2]);
        assert!(r.column_averages[0] > 0.4);
    }

    #[test]
    fn constant_attribute_is_tagged() {
        let ds = DeltaSet::new(
            vec!["age".into(), "smile".into()],
            vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.5, 0.5]],
        )
        .unwrap();
        let err = correlation_matrix(&ds).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("age") && msg.contains("smile") && msg.contains("constant"), "{msg}");
        let table = correlation_table(&ds).unwrap();
        assert_eq!(table.undefined, vec!["age", "smile"]);
        assert_eq!(table.overall, None);
        assert_eq!(table.entries[1][1], None);
    }

    #[test]
    fn table_matches_report_when_defined() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let deltas: Vec<Vec<f64>> = (0..4).map(|_| (0..50).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let ds = DeltaSet::new(labels(4), deltas).unwrap();
        let rep = correlation_matrix(&ds).unwrap();
        let tab = correlation_table(&ds).unwrap();
        for i in 0..4 {
            assert!((rep.column_averages[i] - tab.column_averages[i].unwrap()).abs() < 1e-15);
            for j in 0..4 {
                assert_eq!(Some(rep.matrix.get(i, j)), tab.entries[i][j]);
            }
        }
        assert!((rep.overall - tab.overall.unwrap()).abs() < 1e-15);
        assert!(tab.undefined.is_empty());
    }

    #[test]
    fn delta_set_validation() {
        assert!(DeltaSet::new(labels(2), vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(DeltaSet::new(labels(2), vec![vec![1.0], vec![1.0]]).is_err());
        assert!(DeltaSet::new(labels(1), vec![vec![1.0, 2.0], vec![1.0, 3.0]]).is_err());
        assert!(matches!(
            DeltaSet::new(labels(1), vec![vec![1.0, f64::NAN]]),
            Err(MetricsError::NonFinite(_))
        ));
        let one = DeltaSet::new(labels(1), vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(correlation_matrix(&one), Err(MetricsError::TooFewAttributes(1))));
    }

    #[test]
    fn identity_examples() {
        let e = vec![0.6, 0.8];
        assert_eq!(identity_score(&EmbeddingPair::new(e.clone(), e.clone()).unwrap()), 0.0);
        assert_eq!(identity_score(&EmbeddingPair::new(e.clone(), vec![-0.8, 0.6]).unwrap()), 1.0);
        assert_eq!(identity_score(&EmbeddingPair::new(e, vec![-0.6, -0.8]).unwrap()), 2.0);
        assert!(matches!(EmbeddingPair::new(vec![1.0, 1.0], vec![1.0, 0.0]), Err(MetricsError::NotUnit(_))));
        assert!(EmbeddingPair::new(vec![1.0], vec![1.0, 0.0]).is_err());
    }

    fn trace_of(objs: &[f64]) -> SolveTrace {
        SolveTrace {
            records: objs
                .iter()
                .enumerate()
                .map(|(i, &o)| TraceRecord {
                    iteration: i,
                    objective: o,
                    ortho_residual: 0.0,
                    min_f: None,
                    rel_drop: 0.0,
                    block_objectives: Vec::new(),
                })
                .collect(),
            ridge_warning: false,
        }
    }

    #[test]
    fn trace_summary_examples() {
        let s = trace_summary(&trace_of(&[3.0])).unwrap();
        assert_eq!((s.total_drop, s.max_increase), (0.0, 0.0));
        let s = trace_summary(&trace_of(&[5.0, 4.0, 2.5])).unwrap();
        assert_eq!((s.initial, s.final_objective, s.total_drop), (5.0, 2.5, 2.5));
        assert!(s.max_increase <= 0.0 && s.max_block_increase <= 0.0);
        let s = trace_summary(&trace_of(&[5.0, 5.5, 2.0])).unwrap();
        assert_eq!(s.max_increase, 0.5);
        assert_eq!(trace_summary(&SolveTrace::default()), Err(MetricsError::EmptyTrace));
    }

    #[test]
    fn block_increases_are_seen() {
        let mut t = trace_of(&[5.0, 4.0]);
        t.records[1].block_objectives = vec![4.5, 4.7, 4.0];
        let s = trace_summary(&t).unwrap();
        assert!(s.max_increase < 0.0);
        assert!((s.max_block_increase - 0.2).abs() < 1e-12);
    }

    #[test]
    fn solver_trace_descends() {
        use crate::solver::{aidc_solve, SolverConfig};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = Matrix::from_fn(20, 80, |_, _| StandardNormal.sample(&mut rng));
        let s = crate::boundary::normalize_boundaries(&Matrix::from_fn(20, 4, |_, _| StandardNormal.sample(&mut rng)), None).unwrap();
        let r = aidc_solve(&z, s.matrix(), &SolverConfig::default()).unwrap();
        let sum = trace_summary(&r.trace).unwrap();
        assert!(sum.max_increase <= 1e-9 && sum.max_block_increase <= 1e-9);
    }

    fn seq(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn scale_and_shift_invariance(
            x in seq(12), y in seq(12),
            a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            c in -50.0f64..50.0, d in -50.0f64..50.0,
        ) {
            let r = match pearson_abs(&x, &y) { Ok(r) => r, Err(_) => return Ok(()) };
            let xs: Vec<f64> = x.iter().map(|v| a * v + c).collect();
            let ys: Vec<f64> = y.iter().map(|v| b * v + d).collect();
            prop_assert!((pearson_abs(&xs, &ys).unwrap() - r).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn permutation_equivariance(cols in prop::collection::vec(seq(15), 4), perm in Just([2usize, 0, 3, 1])) {
            let ds = DeltaSet::new(labels(4), cols.clone()).unwrap();
            let r = correlation_matrix(&ds).unwrap();
            let permuted = DeltaSet::new(perm.iter().map(|&i| labels(4)[i].clone()).collect(), perm.iter().map(|&i| cols[i].clone()).collect()).unwrap();
            let rp = correlation_matrix(&permuted).unwrap();
            for a in 0..4 {
                prop_assert!((rp.column_averages[a] - r.column_averages[perm[a]]).abs() < 1e-12);
                for b in 0..4 {
                    prop_assert!((rp.matrix.get(a, b) - r.matrix.get(perm[a], perm[b])).abs() < 1e-15);
                    prop_assert!((r.matrix.get(a, b) - r.matrix.get(b, a)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn self_identity_is_zero(v in prop::collection::vec(-1.0f64..1.0, 6)) {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            let e: Vec<f64> = v.iter().map(|x| x / n).collect();
            prop_assert!(identity_score(&EmbeddingPair::new(e.clone(), e).unwrap()).abs() < 1e-12);
        }
    }
}
