use std::fmt;
use std::str::FromStr;

use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitMode {
    #[default]
    Svd,
    Random,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Svd => "svd",
            InitMode::Random => "random",
        }
    }
}

impl FromStr for InitMode {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svd" => Ok(InitMode::Svd),
            "random" => Ok(InitMode::Random),
            other => Err(SolveError::InvalidConfig(format!(
                "unknown init mode `{other}` (expected svd or random)"
            ))),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Variant {
    #[default]
    Full,
    NoBoundary,
    NoNonneg,
    NoOrthogonality,
    Baseline,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoBoundary,
        Variant::NoNonneg,
        Variant::NoOrthogonality,
        Variant::Baseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoBoundary => "no_boundary",
            Variant::NoNonneg => "no_nonneg",
            Variant::NoOrthogonality => "no_orthogonality",
            Variant::Baseline => "baseline",
        }
    }
}

impl FromStr for Variant {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| SolveError::UnknownVariant(s.to_string()))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once `|J_t − J_{t+1}| / max(1, |J_t|)` falls below this.
    pub rel_tol: f64,
    pub init_mode: InitMode,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 0.5,
            lambda: 1.0,
            max_iters: 30,
            rel_tol: 1e-6,
            init_mode: InitMode::Svd,
            seed: 0,
            variant: Variant::Full,
        }
    }
}

impl SolverConfig {
    /// Validates the configuration and applies the settings each variant
    /// forces (`λ = 0` for no_boundary, `α = 0` for no_nonneg).
    pub fn effective(&self) -> Result<SolverConfig, SolveError> {
        let bad = |msg: String| Err(SolveError::InvalidConfig(msg));
        for (name, v) in [("alpha", self.alpha), ("lambda", self.lambda), ("tol", self.rel_tol)] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.max_iters == 0 {
            return bad("iters must be at least 1".into());
        }
        let mut cfg = *self;
        match cfg.variant {
            Variant::NoBoundary => cfg.lambda = 0.0,
            Variant::NoNonneg => cfg.alpha = 0.0,
            _ => {}
        }
        if matches!(cfg.variant, Variant::Full | Variant::NoBoundary) && cfg.alpha <= 0.0 {
            return bad(format!("variant {} needs alpha > 0", cfg.variant));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SolverConfig::default();
        assert_eq!((c.alpha, c.lambda, c.max_iters, c.rel_tol), (0.5, 1.0, 30, 1e-6));
        assert_eq!(c.init_mode, InitMode::Svd);
        assert_eq!(c.variant, Variant::Full);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("nope".parse::<Variant>(), Err(SolveError::UnknownVariant(_))));
        assert_eq!("random".parse::<InitMode>().unwrap(), InitMode::Random);
        assert!("gauss".parse::<InitMode>().is_err());
    }

    #[test]
    fn forced_settings() {
        let base = SolverConfig { alpha: 2.0, lambda: 3.0, ..SolverConfig::default() };
        let nb = SolverConfig { variant: Variant::NoBoundary, ..base }.effective().unwrap();
        assert_eq!((nb.alpha, nb.lambda), (2.0, 0.0));
        let nn = SolverConfig { variant: Variant::NoNonneg, ..base }.effective().unwrap();
        assert_eq!((nn.alpha, nn.lambda), (0.0, 3.0));
        assert_eq!(base.effective().unwrap(), base);
    }

    #[test]
    fn rejects_invalid() {
        let zero_alpha = SolverConfig { alpha: 0.0, ..SolverConfig::default() };
        assert!(zero_alpha.effective().is_err());
        assert!(SolverConfig { variant: Variant::NoBoundary, ..zero_alpha }.effective().is_err());
        assert!(SolverConfig { variant: Variant::NoNonneg, ..zero_alpha }.effective().is_ok());
        assert!(SolverConfig { lambda: -1.0, ..SolverConfig::default() }.effective().is_err());
        assert!(SolverConfig { rel_tol: f64::NAN, ..SolverConfig::default() }.effective().is_err());
        assert!(SolverConfig { max_iters: 0, ..SolverConfig::default() }.effective().is_err());
    }
}
