//! The six subcommands. Each validates its paths, computes, then writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use semsub::boundary::{apply_edit, controllability_check, normalize_boundaries, EditRequest};
use semsub::metrics::{correlation_table, identity_score, EmbeddingPair};
use semsub::synth::{generate, score_deltas, DeltaNoise, LinearScorer, PlantedModel, PlantedParams};
use semsub::{solve_variant, Matrix, SolveResult, SolverConfig, Variant};

use crate::config::{check_input, check_output, required, RunConfig};
use crate::error::CliError;
use crate::format::{read_matrix, write_matrix, MatrixFormat};

pub const DEFAULT_ALPHAS: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0];
pub const DEFAULT_LAMBDAS: [f64; 4] = [1.0, 2.0, 4.0, 5.0];
pub const DEFAULT_EDIT_BETAS: [f64; 4] = [-0.3, -0.2, 0.2, 0.3];
pub const DEFAULT_METRIC_BETA: f64 = 0.3;
/// F entries below this count as zero in the sparsity column.
pub const SPARSITY_EPS: f64 = 1e-6;
pub const ABLATION_VARIANTS: [Variant; 4] =
    [Variant::Full, Variant::NoBoundary, Variant::NoNonneg, Variant::NoOrthogonality];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn warn(msg: &str) {
    eprintln!("semsub: warning: {msg}");
}

/// Writes `text` to `path`, or to stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_outputs(paths: &[Option<&Path>]) -> Result<(), CliError> {
    paths.iter().flatten().try_for_each(|p| check_output(p))
}

/// Latents, boundaries (zeros under --no-boundary) and the scorers if given.
struct Problem {
    z: Matrix,
    s: Matrix,
    scorers: Option<LinearScorer>,
}

fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let latents = required(&cfg.latents, "latents")?;
    check_input(latents)?;
    let boundaries = if cfg.no_boundary { None } else { Some(required(&cfg.boundaries, "boundaries (or --no-boundary)")?) };
    boundaries.map(check_input).transpose()?;
    cfg.scorers.as_deref().map(check_input).transpose()?;

    let z = read_matrix(latents)?;
    let s = match boundaries {
        Some(path) => {
            let raw = read_matrix(path)?;
            if raw.rows() != z.rows() {
                return Err(CliError::usage(format!(
                    "{}: {} rows but the latents have {}",
                    path.display(),
                    raw.rows(),
                    z.rows()
                )));
            }
            normalize_boundaries(&raw, None)?.into_parts().0
        }
        None => Matrix::zeros(z.rows(), cfg.k.unwrap_or(5)),
    };
    if let Some(k) = cfg.k {
        if k != s.cols() {
            return Err(CliError::usage(format!("--k {k} does not match {} boundary columns", s.cols())));
        }
    }
    let scorers = cfg.scorers.as_deref().map(|p| load_scorers(p, z.rows())).transpose()?;
    Ok(Problem { z, s, scorers })
}

fn load_scorers(path: &Path, m: usize) -> Result<LinearScorer, CliError> {
    let w = read_matrix(path)?;
    if w.rows() != m {
        return Err(CliError::usage(format!("{}: {} rows but the latents have {m}", path.display(), w.rows())));
    }
    Ok(LinearScorer::from_weights(&w, None)?)
}

fn delta_noise(cfg: &RunConfig) -> DeltaNoise {
    let d = DeltaNoise::default();
    DeltaNoise {
        gain_jitter: cfg.gain_jitter.unwrap_or(d.gain_jitter),
        scorer_noise: cfg.scorer_noise.unwrap_or(d.scorer_noise),
        seed: cfg.seed(),
    }
}

fn metric_beta(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.beta.as_deref() {
        None => Ok(DEFAULT_METRIC_BETA),
        Some([b]) => Ok(*b),
        Some(list) => Err(CliError::usage(format!("expected a single --beta, got {}", list.len()))),
    }
}

/// Mean off-diagonal |r| over every edited direction; None when no pair is
/// defined.
fn avg_corr(z: &Matrix, w: &Matrix, scorers: &LinearScorer, beta: f64, noise: &DeltaNoise) -> Result<Option<f64>, CliError> {
    let mut vals = Vec::new();
    for set in score_deltas(z, w, scorers, beta, noise)? {
        if let Some(v) = correlation_table(&set)?.overall {
            vals.push(v);
        }
    }
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

/// A finished solve and its average correlation, if scorers were given.
type Cell = Result<(SolveResult, Option<f64>), CliError>;

fn final_objective(r: &SolveResult) -> f64 {
    r.trace.final_objective().unwrap_or(f64::NAN)
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SEMSUB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("SEMSUB_THREADS must be a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))
}

fn trace_csv(r: &SolveResult) -> String {
    let mut out = String::from("iter,objective,ortho_residual,min_f,rel_drop\n");
    for rec in &r.trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rec.iteration,
            num(rec.objective),
            num(rec.ortho_residual),
            opt_num(rec.min_f),
            num(rec.rel_drop)
        );
    }
    out
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let out = required(&cfg.out, "out")?;
    check_outputs(&[Some(out), cfg.trace.as_deref(), cfg.f_out.as_deref(), cfg.p_out.as_deref()])?;
    let problem = load_problem(cfg)?;
    let r = solve_variant(&problem.z, &problem.s, &cfg.solver_config())?;
    if r.trace.ridge_warning {
        warn("W^T W was singular; the P-update fell back to a ridge of 1e-10");
    }
    write_matrix(out, &r.state.w, cfg.format)?;
    if let Some(p) = &cfg.f_out {
        match &r.state.f {
            Some(f) => write_matrix(p, f, cfg.format)?,
            None => warn("this variant has no F block; --f-out not written"),
        }
    }
    if let Some(p) = &cfg.p_out {
        write_matrix(p, &r.state.p, cfg.format)?;
    }
    if let Some(p) = &cfg.trace {
        emit(Some(p), &trace_csv(&r))?;
    }
    Ok(())
}

fn csv_field(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    check_outputs(&[cfg.out.as_deref()])?;
    let alphas = cfg.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    if alphas.is_empty() || lambdas.is_empty() {
        return Err(CliError::usage("sweep grid is empty"));
    }
    let beta = metric_beta(cfg)?;
    let problem = load_problem(cfg)?;
    let base = cfg.solver_config();
    let noise = delta_noise(cfg);
    let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| lambdas.iter().map(move |&l| (a, l))).collect();

    let run = |&(alpha, lambda): &(f64, f64)| -> Cell {
        let r = solve_variant(&problem.z, &problem.s, &SolverConfig { alpha, lambda, ..base })?;
        let c = match &problem.scorers {
            Some(sc) => avg_corr(&problem.z, &r.state.w, sc, beta, &noise)?,
            None => None,
        };
        Ok((r, c))
    };
    let mut results: Vec<((f64, f64), Cell)> =
        worker_pool()?.install(|| cells.par_iter().map(|c| (*c, run(c))).collect());
    results.sort_by(|(a, _), (b, _)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut out = String::from("alpha,lambda,final_j,avg_corr,iterations_run,status\n");
    for ((a, l), res) in &results {
        match res {
            Ok((r, c)) => {
                let _ = writeln!(out, "{},{},{},{},{},ok", num(*a), num(*l), num(final_objective(r)), opt_num(*c), r.iterations_run);
            }
            Err(e) => {
                let _ = writeln!(out, "{},{},,,,error: {}", num(*a), num(*l), csv_field(&e.to_string()));
            }
        }
    }
    emit(cfg.out.as_deref(), &out)?;
    if results.iter().any(|(_, r)| r.is_ok()) {
        return Ok(());
    }
    match results.into_iter().next().expect("grid is non-empty").1 {
        Err(e) => Err(e),
        Ok(_) => unreachable!("every cell failed"),
    }
}

fn sparsity(f: &Matrix) -> f64 {
    f.as_slice().iter().filter(|&&v| v < SPARSITY_EPS).count() as f64 / f.as_slice().len() as f64
}

pub fn cmd_ablate(cfg: &RunConfig) -> Result<(), CliError> {
    check_outputs(&[cfg.out.as_deref()])?;
    let beta = metric_beta(cfg)?;
    let problem = load_problem(cfg)?;
    let base = cfg.solver_config();
    let noise = delta_noise(cfg);
    let run = |&variant: &Variant| -> Cell {
        let r = solve_variant(&problem.z, &problem.s, &SolverConfig { variant, ..base })?;
        let c = match &problem.scorers {
            Some(sc) => avg_corr(&problem.z, &r.state.w, sc, beta, &noise)?,
            None => None,
        };
        Ok((r, c))
    };
    let mut results: Vec<(Variant, Cell)> =
        worker_pool()?.install(|| ABLATION_VARIANTS.par_iter().map(|v| (*v, run(v))).collect());
    results.sort_by_key(|(v, _)| *v);

    let mut out = String::from("variant,avg_corr,final_j,sparsity_fraction,status\n");
    for (v, res) in &results {
        match res {
            Ok((r, c)) => {
                let sp = r.state.f.as_ref().map_or_else(|| "NA".to_string(), |f| num(sparsity(f)));
                let _ = writeln!(out, "{v},{},{},{sp},ok", opt_num(*c), num(final_objective(r)));
            }
            Err(e) => {
                let _ = writeln!(out, "{v},,,,error: {}", csv_field(&e.to_string()));
            }
        }
    }
    emit(cfg.out.as_deref(), &out)?;
    match results.into_iter().find_map(|(_, r)| r.err()) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = required(&cfg.out, "out (output directory)")?;
    if dir.exists() && !dir.is_dir() {
        return Err(CliError::usage(format!("{}: not a directory", dir.display())));
    }
    let (m, k, n) = (cfg.m.unwrap_or(512), cfg.k.unwrap_or(5), cfg.n.unwrap_or(10_000));
    let d = PlantedParams::default();
    let params = PlantedParams {
        rho: cfg.rho.unwrap_or(d.rho),
        noise_sigma: cfg.noise.unwrap_or(d.noise_sigma),
        boundary_noise: cfg.boundary_noise.unwrap_or(d.boundary_noise),
        seed: cfg.seed(),
    };
    let model = PlantedModel::new(m, k, params)?;
    let data = generate(&model, n)?;

    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let ext = cfg.format.unwrap_or(MatrixFormat::Ufmx).extension();
    let name = |stem: &str| format!("{stem}.{ext}");
    let files = [
        ("latents", name("latents"), &data.z),
        ("boundaries", name("boundaries"), data.s.matrix()),
        ("scorers", name("scorers"), &data.scorers.weights),
        ("truth", name("w_true"), &model.w_true),
    ];
    for (_, file, m) in &files {
        write_matrix(&dir.join(file), m, cfg.format)?;
    }
    let mut manifest = String::from("# planted model; usable as --config for the other commands\n");
    let _ = writeln!(manifest, "m={m}\nk={k}\nn={n}");
    let _ = writeln!(manifest, "rho={}\nnoise={}\nboundary_noise={}", num(params.rho), num(params.noise_sigma), num(params.boundary_noise));
    let _ = writeln!(manifest, "seed={}", params.seed);
    for (key, file, _) in &files {
        let _ = writeln!(manifest, "{key}={file}");
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| CliError::io(&path, e))
}

/// Embedding rows of `a` and `b` paired up.
fn ids_stats(a: &Path, b: &Path) -> Result<String, CliError> {
    let (ea, eb) = (read_matrix(a)?, read_matrix(b)?);
    if ea.shape() != eb.shape() {
        return Err(CliError::usage(format!(
            "embedding files differ in shape: {}x{} vs {}x{}",
            ea.rows(),
            ea.cols(),
            eb.rows(),
            eb.cols()
        )));
    }
    let mut scores = Vec::with_capacity(ea.rows());
    for i in 0..ea.rows() {
        let pair = EmbeddingPair::new(ea.row(i).to_vec(), eb.row(i).to_vec())?;
        scores.push(identity_score(&pair));
    }
    let count = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / count;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / count).sqrt();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("ids_mean,ids_std,ids_min,ids_max,count\n{},{},{},{},{}\n", num(mean), num(std), num(min), num(max), scores.len()))
}

/// Entrywise mean over tables; an entry undefined in any table stays
/// undefined.
fn mean_table(tables: &[Vec<Vec<Option<f64>>>]) -> Vec<Vec<Option<f64>>> {
    let k = tables[0].len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let vals: Option<Vec<f64>> = tables.iter().map(|t| t[i][j]).collect();
                    vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect()
        })
        .collect()
}

pub fn cmd_metrics(cfg: &RunConfig) -> Result<(), CliError> {
    check_outputs(&[cfg.out.as_deref()])?;
    let basis = required(&cfg.basis, "basis")?;
    let latents = required(&cfg.latents, "latents")?;
    let scorers = required(&cfg.scorers, "scorers")?;
    let embeddings = match (&cfg.emb_ori, &cfg.emb_edit) {
        (Some(a), Some(b)) => Some((a.as_path(), b.as_path())),
        (None, None) => None,
        _ => return Err(CliError::usage("--emb-ori and --emb-edit go together")),
    };
    for p in [basis, latents, scorers].into_iter().chain(embeddings.into_iter().flat_map(|(a, b)| [a, b])) {
        check_input(p)?;
    }
    let beta = metric_beta(cfg)?;
    let noise = delta_noise(cfg);
    let (w, z) = (read_matrix(basis)?, read_matrix(latents)?);
    let scorer = load_scorers(scorers, z.rows())?;
    let w = match cfg.index {
        Some(i) if i >= w.cols() => {
            return Err(CliError::usage(format!("--index {i} out of range for {} directions", w.cols())))
        }
        Some(i) => Matrix::from_columns(&[w.column(i)])?,
        None => w,
    };

    let mut tables = Vec::new();
    for set in score_deltas(&z, &w, &scorer, beta, &noise)? {
        tables.push(correlation_table(&set)?.entries);
    }
    let entries = mean_table(&tables);
    let k = scorer.k();
    let labels = &scorer.labels;
    let column_avg: Vec<Option<f64>> = (0..k)
        .map(|j| {
            let vals: Option<Vec<f64>> = (0..k).filter(|&i| i != j).map(|i| entries[i][j]).collect();
            vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let overall: Option<Vec<f64>> = column_avg.iter().copied().collect();
    let overall = overall.map(|v| v.iter().sum::<f64>() / v.len() as f64);
    let undefined: Vec<&str> =
        (0..k).filter(|&i| entries[i].iter().any(Option::is_none)).map(|i| labels[i].as_str()).collect();

    let cell = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), num);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# beta={} scorer_noise={} gain_jitter={} seed={}",
        num(beta),
        num(noise.scorer_noise),
        num(noise.gain_jitter),
        noise.seed
    );
    let _ = writeln!(out, "attribute,{}", labels.join(","));
    for (i, row) in entries.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
        let _ = writeln!(out, "{},{}", labels[i], cells.join(","));
    }
    let cells: Vec<String> = column_avg.iter().map(|&v| cell(v)).collect();
    let _ = writeln!(out, "Avg,{}", cells.join(","));
    let _ = writeln!(out, "# avg_corr={}", cell(overall));
    if let Some((a, b)) = embeddings {
        out.push('\n');
        out.push_str(&ids_stats(a, b)?);
    }
    if !undefined.is_empty() {
        warn(&format!("constant score deltas, correlations undefined for: {}", undefined.join(", ")));
    }
    emit(cfg.out.as_deref(), &out)
}

/// A latent vector stored as a single row or a single column.
fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let v = read_matrix(path)?;
    match v.shape() {
        (_, 1) => Ok(v.column(0)),
        (1, _) => Ok(v.row(0).to_vec()),
        (r, c) => Err(CliError::usage(format!("{}: expected a vector, got {r}x{c}", path.display()))),
    }
}

pub fn cmd_edit(cfg: &RunConfig) -> Result<(), CliError> {
    let out = required(&cfg.out, "out")?;
    check_outputs(&[Some(out), cfg.distances.as_deref()])?;
    let basis = required(&cfg.basis, "basis")?;
    let vector = required(&cfg.vector, "vector")?;
    let index = cfg.index.ok_or_else(|| CliError::usage("missing --index"))?;
    for p in [Some(basis), Some(vector), cfg.boundaries.as_deref()].into_iter().flatten() {
        check_input(p)?;
    }
    let betas = cfg.beta.clone().unwrap_or_else(|| DEFAULT_EDIT_BETAS.to_vec());
    if betas.is_empty() {
        return Err(CliError::usage("--beta list is empty"));
    }
    let w = read_matrix(basis)?;
    if index >= w.cols() {
        return Err(CliError::usage(format!("--index {index} out of range for {} directions", w.cols())));
    }
    let z = read_vector(vector)?;
    let columns = betas
        .iter()
        .map(|&beta| apply_edit(&EditRequest { z: z.clone(), direction_index: index, beta }, &w))
        .collect::<Result<Vec<_>, _>>()?;
    let distances = match &cfg.boundaries {
        Some(p) => {
            let s = normalize_boundaries(&read_matrix(p)?, None)?.into_parts().0;
            if index >= s.cols() {
                return Err(CliError::usage(format!("{}: no column {index}", p.display())));
            }
            let d = controllability_check(&w.column(index), &s.column(index), &betas)?;
            let mut text = String::from("beta,distance\n");
            for (b, dist) in d {
                let _ = writeln!(text, "{},{}", num(b), num(dist));
            }
            Some(text)
        }
        None => None,
    };
    write_matrix(out, &Matrix::from_columns(&columns)?, cfg.format)?;
    if let Some(text) = distances {
        emit(cfg.distances.as_deref(), &text)?;
    }
    Ok(())
}
