//! Named solver strategies, selected at runtime.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::SolveError;
use crate::matrix::Matrix;

use super::loops::{baseline_result, run_stiefel, run_unconstrained};
use super::{aidc_solve, SolveResult, SolverConfig, Variant};

pub trait SubspaceSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// `config` has already been through [`SolverConfig::effective`] when
    /// called via [`solve_variant`].
    fn solve(&self, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError>;
}

struct Full;
struct NoBoundary;
struct NoNonneg;
struct NoOrthogonality;
struct Baseline;

impl SubspaceSolver for Full {
    fn name(&self) -> &'static str {
        Variant::Full.as_str()
    }
    fn description(&self) -> &'static str {
        "W/P/F alternation with boundary repulsion"
    }
    fn solve(&self, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
        aidc_solve(z, s, config)
    }
}

impl SubspaceSolver for NoBoundary {
    fn name(&self) -> &'static str {
        Variant::NoBoundary.as_str()
    }
    fn description(&self) -> &'static str {
        "full alternation with lambda = 0"
    }
    fn solve(&self, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
        aidc_solve(z, s, &SolverConfig { lambda: 0.0, ..*config })
    }
}

impl SubspaceSolver for NoNonneg {
    fn name(&self) -> &'static str {
        Variant::NoNonneg.as_str()
    }
    fn description(&self) -> &'static str {
        "W/P alternation without the non-negative auxiliary"
    }
    fn solve(&self, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
        let cfg = SolverConfig { variant: Variant::NoNonneg, ..*config }.effective()?;
        run_stiefel(z, s, &cfg)
    }
}

impl SubspaceSolver for NoOrthogonality {
    fn name(&self) -> &'static str {
        Variant::NoOrthogonality.as_str()
    }
    fn description(&self) -> &'static str {
        "column-normalized W, P from the normal equations"
    }
    fn solve(&self, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
        let cfg = SolverConfig { variant: Variant::NoOrthogonality, ..*config }.effective()?;
        run_unconstrained(z, s, &cfg)
    }
}

impl SubspaceSolver for Baseline {
    fn name(&self) -> &'static str {
        Variant::Baseline.as_str()
    }
    fn description(&self) -> &'static str {
        "truncated SVD, unit-Frobenius W"
    }
    fn solve(&self, z: &Matrix, s: &Matrix, _config: &SolverConfig) -> Result<SolveResult, SolveError> {
        baseline_result(z, s)
    }
}

#[derive(Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn SubspaceSolver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register(Box::new(Full));
        reg.register(Box::new(NoBoundary));
        reg.register(Box::new(NoNonneg));
        reg.register(Box::new(NoOrthogonality));
        reg.register(Box::new(Baseline));
        reg
    }

    /// Registers `solver` under its name, returning any solver it replaced.
    pub fn register(&mut self, solver: Box<dyn SubspaceSolver>) -> Option<Box<dyn SubspaceSolver>> {
        self.solvers.insert(solver.name(), solver)
    }

    pub fn get(&self, name: &str) -> Option<&dyn SubspaceSolver> {
        self.solvers.get(name).map(|b| b.as_ref())
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }

    pub fn solve(&self, name: &str, z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
        let solver = self.get(name).ok_or_else(|| SolveError::UnknownVariant(name.to_string()))?;
        solver.solve(z, s, config)
    }
}

pub fn builtin_registry() -> &'static SolverRegistry {
    static REGISTRY: OnceLock<SolverRegistry> = OnceLock::new();
    REGISTRY.get_or_init(SolverRegistry::with_builtins)
}

/// Validates `config` and dispatches to the solver named by its variant.
pub fn solve_variant(z: &Matrix, s: &Matrix, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let cfg = config.effective()?;
    builtin_registry().solve(cfg.variant.as_str(), z, s, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64) -> (Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = gaussian_matrix(16, 40, &mut rng);
        let raw = gaussian_matrix(16, 3, &mut rng);
        let norms = raw.column_norms();
        (z, Matrix::from_fn(16, 3, |i, j| raw.get(i, j) / norms[j]))
    }

    #[test]
    fn builtins_cover_every_variant() {
        let reg = SolverRegistry::with_builtins();
        let mut expected: Vec<_> = Variant::ALL.iter().map(|v| v.as_str()).collect();
        expected.sort();
        assert_eq!(reg.names(), expected);
        for v in Variant::ALL {
            assert_eq!(reg.get(v.as_str()).unwrap().name(), v.as_str());
        }
        assert!(reg.get("nope").is_none());
    }

    #[test]
    fn register_replaces_by_name() {
        struct Fake;
        impl SubspaceSolver for Fake {
            fn name(&self) -> &'static str {
                "full"
            }
            fn description(&self) -> &'static str {
                "fake"
            }
            fn solve(&self, _: &Matrix, _: &Matrix, _: &SolverConfig) -> Result<SolveResult, SolveError> {
                Err(SolveError::InvalidConfig("fake".into()))
            }
        }
        let mut reg = SolverRegistry::with_builtins();
        let old = reg.register(Box::new(Fake)).unwrap();
        assert_eq!(old.description(), Full.description());
        let (z, s) = instance(1);
        assert!(reg.solve("full", &z, &s, &SolverConfig::default()).is_err());
        assert!(matches!(
            reg.solve("zzz", &z, &s, &SolverConfig::default()),
            Err(SolveError::UnknownVariant(_))
        ));
    }

    #[test]
    fn no_boundary_matches_aidc_with_zero_lambda_bitwise() {
        let (z, s) = instance(2);
        for init_mode in [super::super::InitMode::Svd, super::super::InitMode::Random] {
            let cfg = SolverConfig { init_mode, seed: 9, ..SolverConfig::default() };
            let a = solve_variant(&z, &s, &SolverConfig { variant: Variant::NoBoundary, ..cfg }).unwrap();
            let b = aidc_solve(&z, &s, &SolverConfig { lambda: 0.0, ..cfg }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn no_orthogonality_columns_are_unit() {
        let (z, s) = instance(3);
        let cfg = SolverConfig { variant: Variant::NoOrthogonality, ..SolverConfig::default() };
        let r = solve_variant(&z, &s, &cfg).unwrap();
        for n in r.state.w.column_norms() {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_through_registry() {
        let (z, s) = instance(4);
        let cfg = SolverConfig { variant: Variant::Baseline, ..SolverConfig::default() };
        let r = solve_variant(&z, &s, &cfg).unwrap();
        assert_eq!(r.state, super::super::solve_baseline(&z, 3).unwrap());
        assert_eq!((r.iterations_run, r.trace.records.len()), (0, 1));
    }

    #[test]
    fn full_requires_positive_alpha() {
        let (z, s) = instance(5);
        let cfg = SolverConfig { alpha: 0.0, ..SolverConfig::default() };
        assert!(matches!(solve_variant(&z, &s, &cfg), Err(SolveError::InvalidConfig(_))));
        let nn = SolverConfig { variant: Variant::NoNonneg, ..cfg };
        assert!(solve_variant(&z, &s, &nn).unwrap().state.f.is_none());
    }
}
