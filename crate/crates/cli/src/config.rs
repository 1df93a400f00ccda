//! Run settings: command-line flags merged over an optional key=value file.
//!
//! The file holds one `key = value` per line. `#` starts a comment, and `-`
//! and `_` are interchangeable in keys. Keys are the flag names. Relative
//! paths resolve against the file's directory. Unknown or repeated keys are
//! errors, because a silent typo in `alpha` would invalidate a whole sweep.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use semsub::{InitMode, SolverConfig, Variant};

use crate::error::CliError;
use crate::format::MatrixFormat;

/// Every key a config file may contain.
pub const KEYS: &[&str] = &[
    "alpha",
    "lambda",
    "iters",
    "tol",
    "k",
    "init",
    "seed",
    "variant",
    "latents",
    "boundaries",
    "no_boundary",
    "out",
    "trace",
    "f_out",
    "p_out",
    "beta",
    "format",
    "alphas",
    "lambdas",
    "basis",
    "scorers",
    "vector",
    "index",
    "emb_ori",
    "emb_edit",
    "distances",
    "m",
    "n",
    "rho",
    "noise",
    "boundary_noise",
    "scorer_noise",
    "gain_jitter",
    "truth",
];

#[derive(Debug, Clone, Default, Args)]
pub struct RunConfig {
    /// key=value file; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// weight of the non-negative coupling term [0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// weight of the boundary repulsion term [1.0]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// iteration cap [30]
    #[arg(long)]
    pub iters: Option<usize>,
    /// relative objective drop that stops the loop [1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// number of directions
    #[arg(long)]
    pub k: Option<usize>,
    /// svd or random [svd]
    #[arg(long)]
    pub init: Option<InitMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full, no_boundary, no_nonneg, no_orthogonality or baseline [full]
    #[arg(long)]
    pub variant: Option<Variant>,
    /// m×n latent samples
    #[arg(long)]
    pub latents: Option<PathBuf>,
    /// m×k boundary normals
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
    /// solve without boundaries (λ = 0)
    #[arg(long)]
    pub no_boundary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub f_out: Option<PathBuf>,
    #[arg(long)]
    pub p_out: Option<PathBuf>,
    /// comma-separated edit strengths
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// ufmx or csv; defaults to the output file's extension
    #[arg(long)]
    pub format: Option<MatrixFormat>,
    /// sweep grid for alpha [0.1,0.2,0.5,1,2,3,5]
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// sweep grid for lambda [1,2,4,5]
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// m×k learned directions
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// m×a scorer weights, one column per attribute
    #[arg(long)]
    pub scorers: Option<PathBuf>,
    /// latent vector to edit (m×1 or 1×m)
    #[arg(long)]
    pub vector: Option<PathBuf>,
    /// direction to edit along
    #[arg(long)]
    pub index: Option<usize>,
    /// original embeddings, one per row
    #[arg(long)]
    pub emb_ori: Option<PathBuf>,
    /// edited embeddings, one per row
    #[arg(long)]
    pub emb_edit: Option<PathBuf>,
    /// where edit writes its distance table [stdout]
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// latent dimension for synth [512]
    #[arg(long)]
    pub m: Option<usize>,
    /// sample count for synth [10000]
    #[arg(long)]
    pub n: Option<usize>,
    /// correlation between planted codes [0]
    #[arg(long)]
    pub rho: Option<f64>,
    /// latent noise level for synth [0.05]
    #[arg(long)]
    pub noise: Option<f64>,
    /// boundary perturbation for synth [0.2]
    #[arg(long)]
    pub boundary_noise: Option<f64>,
    /// per-attribute score noise for metrics [1e-3]
    #[arg(long)]
    pub scorer_noise: Option<f64>,
    /// per-sample score gain jitter for metrics [1e-2]
    #[arg(long)]
    pub gain_jitter: Option<f64>,
    /// planted directions written by synth
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

struct FileValues {
    path: PathBuf,
    dir: PathBuf,
    values: BTreeMap<String, (String, usize)>,
}

impl FileValues {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let bad = |line: usize, message: String| CliError::Config { path: path.to_path_buf(), line, message };
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected key=value, got `{content}`")))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(bad(line, format!("unknown key `{key}`")));
            }
            if let Some((_, first)) = values.get(&key) {
                return Err(bad(line, format!("key `{key}` already set on line {first}")));
            }
            values.insert(key, (value.trim().to_string(), line));
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(FileValues { path: path.to_path_buf(), dir, values })
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str, line: usize) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        raw.parse().map_err(|e| CliError::Config {
            path: self.path.clone(),
            line,
            message: format!("bad value for `{key}`: {e}"),
        })
    }

    fn fill<T: FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<(), CliError>
    where
        T::Err: Display,
    {
        if let (None, Some((raw, line))) = (slot.as_ref(), self.values.get(key)) {
            *slot = Some(self.parse_value(key, raw, *line)?);
        }
        Ok(())
    }

    fn fill_list(&self, slot: &mut Option<Vec<f64>>, key: &str) -> Result<(), CliError> {
        if let (None, Some((raw, line))) = (slot.as_ref(), self.values.get(key)) {
            let items = raw.split(',').map(|s| self.parse_value(key, s.trim(), *line)).collect::<Result<_, _>>()?;
            *slot = Some(items);
        }
        Ok(())
    }

    fn fill_path(&self, slot: &mut Option<PathBuf>, key: &str) {
        if let (None, Some((raw, _))) = (slot.as_ref(), self.values.get(key)) {
            *slot = Some(self.dir.join(raw));
        }
    }
}

impl RunConfig {
    /// Fills every unset field from the `--config` file, if one is given.
    pub fn merged(mut self) -> Result<Self, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = FileValues::load(&path)?;
        self.merge_from(&file)?;
        Ok(self)
    }

    /// Like [`RunConfig::merged`] with the file contents given directly.
    pub fn merged_with_text(mut self, text: &str, path: &Path) -> Result<Self, CliError> {
        let file = FileValues::parse(text, path)?;
        self.merge_from(&file)?;
        Ok(self)
    }

    fn merge_from(&mut self, f: &FileValues) -> Result<(), CliError> {
        f.fill(&mut self.alpha, "alpha")?;
        f.fill(&mut self.lambda, "lambda")?;
        f.fill(&mut self.iters, "iters")?;
        f.fill(&mut self.tol, "tol")?;
        f.fill(&mut self.k, "k")?;
        f.fill(&mut self.init, "init")?;
        f.fill(&mut self.seed, "seed")?;
        f.fill(&mut self.variant, "variant")?;
        f.fill(&mut self.format, "format")?;
        f.fill(&mut self.index, "index")?;
        f.fill(&mut self.m, "m")?;
        f.fill(&mut self.n, "n")?;
        f.fill(&mut self.rho, "rho")?;
        f.fill(&mut self.noise, "noise")?;
        f.fill(&mut self.boundary_noise, "boundary_noise")?;
        f.fill(&mut self.scorer_noise, "scorer_noise")?;
        f.fill(&mut self.gain_jitter, "gain_jitter")?;
        f.fill_list(&mut self.beta, "beta")?;
        f.fill_list(&mut self.alphas, "alphas")?;
        f.fill_list(&mut self.lambdas, "lambdas")?;
        if !self.no_boundary {
            let mut v = None;
            f.fill::<bool>(&mut v, "no_boundary")?;
            self.no_boundary = v.unwrap_or(false);
        }
        for (slot, key) in [
            (&mut self.latents, "latents"),
            (&mut self.boundaries, "boundaries"),
            (&mut self.out, "out"),
            (&mut self.trace, "trace"),
            (&mut self.f_out, "f_out"),
            (&mut self.p_out, "p_out"),
            (&mut self.basis, "basis"),
            (&mut self.scorers, "scorers"),
            (&mut self.vector, "vector"),
            (&mut self.emb_ori, "emb_ori"),
            (&mut self.emb_edit, "emb_edit"),
            (&mut self.distances, "distances"),
            (&mut self.truth, "truth"),
        ] {
            f.fill_path(slot, key);
        }
        Ok(())
    }

    /// Solver settings with unset fields at their defaults.
    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            lambda: if self.no_boundary { 0.0 } else { self.lambda.unwrap_or(d.lambda) },
            max_iters: self.iters.unwrap_or(d.max_iters),
            rel_tol: self.tol.unwrap_or(d.rel_tol),
            init_mode: self.init.unwrap_or(d.init_mode),
            seed: self.seed.unwrap_or(d.seed),
            variant: self.variant.unwrap_or(d.variant),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// The value of a required path setting, or a usage error naming the flag.
pub fn required<'a>(slot: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    slot.as_deref().ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

/// Fails early when an input file is missing.
pub fn check_input(path: &Path) -> Result<(), CliError> {
    match fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(CliError::usage(format!("{}: not a regular file", path.display()))),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// Fails early when an output file could not be created.
pub fn check_output(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        return Err(CliError::usage(format!("{}: is a directory", path.display())));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => return Ok(()),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{}: directory {} does not exist", path.display(), parent.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn merged(flags: RunConfig, text: &str) -> Result<RunConfig, CliError> {
        flags.merged_with_text(text, Path::new("/runs/a/run.cfg"))
    }

    #[test]
    fn file_values_fill_unset_fields() {
        let text = "# sweep\nalpha = 2\nlambda=4 # trailing\ninit=random\nvariant = no_nonneg\nbeta=-0.3, 0.2\nlatents=z.ufmx\nno-boundary=true\n";
        let c = merged(RunConfig::default(), text).unwrap();
        assert_eq!(c.alpha, Some(2.0));
        assert_eq!(c.lambda, Some(4.0));
        assert_eq!(c.init, Some(InitMode::Random));
        assert_eq!(c.variant, Some(Variant::NoNonneg));
        assert_eq!(c.beta, Some(vec![-0.3, 0.2]));
        assert_eq!(c.latents, Some(PathBuf::from("/runs/a/z.ufmx")));
        assert!(c.no_boundary);
        assert_eq!(c.solver_config().lambda, 0.0);
    }

    #[test]
    fn flags_override_file() {
        let flags = RunConfig { alpha: Some(0.1), latents: Some("mine.csv".into()), ..RunConfig::default() };
        let c = merged(flags, "alpha=2\nlatents=z.ufmx\nlambda=3\n").unwrap();
        assert_eq!(c.alpha, Some(0.1));
        assert_eq!(c.latents, Some(PathBuf::from("mine.csv")));
        assert_eq!(c.lambda, Some(3.0));
    }

    #[test]
    fn unknown_and_repeated_keys_fail_with_line() {
        let e = merged(RunConfig::default(), "alpha=1\n\nalhpa=2\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("alhpa"), "{e}");
        let e = merged(RunConfig::default(), "k=3\nk=4\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("line 1"), "{e}");
        let e = merged(RunConfig::default(), "tol=fast\n").unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("tol"), "{e}");
        assert!(merged(RunConfig::default(), "just words\n").is_err());
        assert!(merged(RunConfig::default(), "init=qr\n").is_err());
    }

    #[test]
    fn defaults() {
        assert_eq!(RunConfig::default().solver_config(), SolverConfig::default());
    }

    #[test]
    fn output_checks() {
        let dir = std::env::temp_dir();
        assert!(check_output(&dir.join("x.ufmx")).is_ok());
        assert!(check_output(Path::new("x.ufmx")).is_ok());
        assert!(check_output(&dir).is_err());
        assert!(check_output(&dir.join("no-such-dir-7f3a/x.ufmx")).is_err());
        assert!(check_input(&dir.join("no-such-file-7f3a")).is_err());
    }
}
