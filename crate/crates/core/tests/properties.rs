use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use semsub::boundary::normalize_boundaries;
use semsub::matrix::{frobenius_inner, matmul_nt, orthonormality_residual};
use semsub::metrics::{correlation_matrix, trace_summary};
use semsub::solver::{evaluate_objective, project_nonneg, solve_procrustes, update_p, SolveState};
use semsub::synth::{generate, haar_frame, score_deltas, DeltaNoise, PlantedModel, PlantedParams};
use semsub::{aidc_solve, solve_variant, Matrix, SolverConfig, Variant};

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn unit_boundaries(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    normalize_boundaries(&gaussian(m, k, rng), None).unwrap().matrix().clone()
}

#[test]
fn procrustes_beats_haar_frames() {
    let a = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]).unwrap();
    let w = solve_procrustes(&a).unwrap();
    assert!(orthonormality_residual(&w) < 1e-9);
    let best = frobenius_inner(&a, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100_000 {
        let q = haar_frame(3, 2, &mut rng);
        assert!(frobenius_inner(&a, &q).unwrap() <= best + 1e-12);
    }
}

/// The polar factor of `ZPᵀ + αF − λS` minimizes the whole W-subproblem,
/// not just the distance to that target.
#[test]
fn procrustes_target_minimizes_w_subproblem() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..5 {
        let (m, k, n) = (6, 2, 9);
        let z = gaussian(m, n, &mut rng);
        let p = gaussian(k, n, &mut rng);
        let f = project_nonneg(&gaussian(m, k, &mut rng));
        let s = unit_boundaries(m, k, &mut rng);
        let (alpha, lambda) = (0.7, 1.8);
        let target = matmul_nt(&z, &p).unwrap().add_scaled(alpha, &f).unwrap().add_scaled(-lambda, &s).unwrap();
        let w = solve_procrustes(&target).unwrap();
        let value = |w: Matrix| {
            let st = SolveState { w, p: p.clone(), f: Some(f.clone()) };
            evaluate_objective(&z, &st, &s, alpha, lambda).unwrap()
        };
        let best = value(w);
        for _ in 0..10_000 {
            assert!(best <= value(haar_frame(m, k, &mut rng)) + 1e-9);
        }
    }
}

#[test]
fn aidc_trace_descends_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for (alpha, lambda) in [(0.1, 5.0), (0.5, 1.0), (5.0, 2.0)] {
        let z = gaussian(64, 500, &mut rng);
        let s = unit_boundaries(64, 5, &mut rng);
        let r = aidc_solve(&z, &s, &SolverConfig { alpha, lambda, ..SolverConfig::default() }).unwrap();
        let sum = trace_summary(&r.trace).unwrap();
        assert!(sum.max_block_increase <= 1e-9, "{sum:?}");
        assert!(orthonormality_residual(&r.state.w) < 1e-8);
        assert!(r.state.f.unwrap().min_entry() >= 0.0);
    }
}

#[test]
fn every_variant_emits_valid_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let z = gaussian(20, 60, &mut rng);
    let s = unit_boundaries(20, 3, &mut rng);
    for v in Variant::ALL {
        let r = solve_variant(&z, &s, &SolverConfig { variant: v, ..SolverConfig::default() }).unwrap();
        assert!(r.iterations_run <= 30);
        if matches!(v, Variant::Full | Variant::NoBoundary | Variant::NoNonneg) {
            assert!(orthonormality_residual(&r.state.w) < 1e-8, "{v}");
        }
        if let Some(f) = &r.state.f {
            assert!(f.min_entry() >= 0.0, "{v}");
        }
    }
}

fn avg_corr(z: &Matrix, w: &Matrix, pm: &PlantedModel) -> f64 {
    let sets = score_deltas(z, w, &pm.scorers(), 0.3, &DeltaNoise { seed: pm.seed, ..DeltaNoise::default() }).unwrap();
    sets.iter().map(|d| correlation_matrix(d).unwrap().overall).sum::<f64>() / sets.len() as f64
}

#[test]
fn planted_directions_are_recovered() {
    let params = PlantedParams { rho: 0.0, noise_sigma: 1e-3, boundary_noise: 1e-3, seed: 0 };
    let pm = PlantedModel::new(64, 5, params).unwrap();
    let data = generate(&pm, 5000).unwrap();
    let r = aidc_solve(&data.z, data.s.matrix(), &SolverConfig::default()).unwrap();
    let c = avg_corr(&data.z, &r.state.w, &pm);
    assert!(c < 0.05, "avg correlation {c}");
}

fn zero_fraction(f: &Matrix) -> f64 {
    f.as_slice().iter().filter(|&&v| v < 1e-6).count() as f64 / f.as_slice().len() as f64
}

/// Sparsity is a property of the optimum: it is checked on noise-free
/// planted data solved to stagnation.
#[test]
fn full_auxiliary_is_sparser_than_baseline() {
    for seed in 0..3 {
        let params = PlantedParams { rho: 0.0, noise_sigma: 0.0, boundary_noise: 0.0, seed };
        let pm = PlantedModel::new(64, 5, params).unwrap();
        let data = generate(&pm, 2000).unwrap();
        let s = data.s.matrix();
        let cfg = SolverConfig { max_iters: 3000, rel_tol: 1e-14, ..SolverConfig::default() };
        let full = solve_variant(&data.z, s, &cfg).unwrap();
        let base = solve_variant(&data.z, s, &SolverConfig { variant: Variant::Baseline, ..cfg }).unwrap();
        let (a, b) = (zero_fraction(full.state.f.as_ref().unwrap()), zero_fraction(base.state.f.as_ref().unwrap()));
        assert!(a > b, "seed {seed}: full {a} vs baseline {b}");
    }
}

#[test]
fn solves_are_deterministic() {
    let pm = PlantedModel::new(24, 3, PlantedParams { rho: 0.3, seed: 4, ..PlantedParams::default() }).unwrap();
    let data = generate(&pm, 300).unwrap();
    for v in Variant::ALL {
        let cfg = SolverConfig { variant: v, init_mode: semsub::InitMode::Random, seed: 77, ..SolverConfig::default() };
        assert_eq!(solve_variant(&data.z, data.s.matrix(), &cfg), solve_variant(&data.z, data.s.matrix(), &cfg));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn p_update_is_least_squares(seed in any::<u64>(), m in 3usize..12, n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + (seed as usize) % m.min(n);
        let w = haar_frame(m, k, &mut rng);
        let z = gaussian(m, n, &mut rng);
        let p = update_p(&w, &z).unwrap();
        // residual is orthogonal to span(W)
        let resid = z.sub(&semsub::matrix::matmul(&w, &p).unwrap()).unwrap();
        let proj = semsub::matrix::matmul_tn(&w, &resid).unwrap();
        prop_assert!(proj.as_slice().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn descent_holds_for_random_settings(seed in any::<u64>(), alpha in 0.05f64..6.0, lambda in 0.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = gaussian(12, 30, &mut rng);
        let s = unit_boundaries(12, 3, &mut rng);
        let r = aidc_solve(&z, &s, &SolverConfig { alpha, lambda, ..SolverConfig::default() }).unwrap();
        prop_assert!(trace_summary(&r.trace).unwrap().max_block_increase <= 1e-9);
    }
}
