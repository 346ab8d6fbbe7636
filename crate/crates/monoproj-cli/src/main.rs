//! `monoproj` — monotone curve and surface estimation by projecting
//! Gaussian-process posterior draws onto the monotone cone.
//!
//! Subcommands: `simulate` (benchmark datasets), `fit` (posterior-projection
//! estimate with credible bands), `project` (standalone isotonic
//! projection), `benchmark` (replicated RMSE table). Exit codes: 0 success,
//! 2 validation error, 3 numerical failure. Set `MONOPROJ_LOG` for log
//! verbosity.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monoproj::benchmark::{self, BenchmarkConfig, CurveTruthId};
use monoproj::gp::kron::detect_lattice;
use monoproj::io::{self, Dataset, FileConfig};
use monoproj::mcmc::McmcConfig;
use monoproj::pipeline::{self, FitOptions, Model};
use monoproj::proj2d::{project_lattice, project_surface};
use monoproj::simgen::{
    self, simulate_curve, simulate_curve_binary, simulate_surface, simulate_surface_binary,
    CurveTruth, Design, SurfaceTruth,
};
use monoproj::{GridFunction, LatticeGrid, SurfaceGrid};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "monoproj",
    version,
    about = "Bayesian monotone curve and surface estimation via Gaussian-process projection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset CSV from a benchmark truth
    Simulate(SimulateArgs),
    /// Fit a monotone curve or surface and write estimate + diagnostics
    Fit(FitArgs),
    /// Project a curve or gridded surface onto the monotone cone
    Project(ProjectArgs),
    /// Replicated RMSE benchmark of projected vs unprojected GP estimates
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// JSON config file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Truth id (curves: flat|sinusoidal|step|linear|exponential|logistic;
    /// surfaces: flat|additive_linear|product|smoothed_step|logistic_ridge|
    /// exponential|mixture)
    #[arg(long)]
    truth: Option<String>,
    /// Covariate dimension: 1 for curves, 2 for surfaces
    #[arg(long)]
    dim: Option<usize>,
    /// Observations (curves)
    #[arg(long)]
    n: Option<usize>,
    /// Lattice rows (surfaces)
    #[arg(long)]
    m1: Option<usize>,
    /// Lattice columns (surfaces)
    #[arg(long)]
    m2: Option<usize>,
    /// Noise standard deviation (Gaussian responses)
    #[arg(long)]
    sigma: Option<f64>,
    /// Curve design: equidistant | uniform
    #[arg(long)]
    design: Option<String>,
    /// gaussian (default) draws y = F0 + noise; probit draws Bernoulli(Phi(F0))
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Input dataset CSV
    #[arg(long)]
    data: PathBuf,
    /// Output prefix: writes <out>.estimate.csv and <out>.diagnostics.json
    #[arg(long)]
    out: PathBuf,
    /// gaussian | probit
    #[arg(long)]
    model: Option<String>,
    /// Covariate dimension; inferred from the CSV header when omitted
    #[arg(long)]
    dim: Option<usize>,
    /// MCMC iterations (default 5000 for curves, 3000 for surfaces)
    #[arg(long)]
    iters: Option<usize>,
    /// Burn-in iterations (default 1000 for curves, 500 for surfaces)
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Credible level for the pointwise bands
    #[arg(long)]
    level: Option<f64>,
    /// Worker threads for per-draw projection
    #[arg(long)]
    jobs: Option<usize>,
    /// Monotonicity tolerance of the surface projection
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the surface projection
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Input CSV: x,value[,weight] or x1,x2[,x3],value
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Root seed (required: benchmark runs must be reproducible)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated curve truth ids (default: all six)
    #[arg(long)]
    truths: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
}

/// Validation failures exit 2; numerical failures exit 3.
enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<io::DataError> for CliError {
    fn from(e: io::DataError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<simgen::SimError> for CliError {
    fn from(e: simgen::SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<pipeline::PipelineError> for CliError {
    fn from(e: pipeline::PipelineError) -> Self {
        match e {
            pipeline::PipelineError::InvalidData(_) => CliError::Validation(e.to_string()),
            pipeline::PipelineError::Mcmc(monoproj::mcmc::McmcError::InvalidConfig(ref m)) => {
                CliError::Validation(m.clone())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<monoproj::proj2d::Proj2dError> for CliError {
    fn from(e: monoproj::proj2d::Proj2dError) -> Self {
        use monoproj::proj2d::Proj2dError::*;
        match e {
            BadTolerance(_) | BadMaxIter | GridTooLarge { .. } | WeightLength { .. }
            | BadWeights | Grid(_) => CliError::Validation(e.to_string()),
            NonFiniteIntermediate => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<benchmark::BenchmarkError> for CliError {
    fn from(e: benchmark::BenchmarkError) -> Self {
        match e {
            benchmark::BenchmarkError::InvalidConfig(_) | benchmark::BenchmarkError::Sim(_) => {
                CliError::Validation(e.to_string())
            }
            benchmark::BenchmarkError::Pool(_) => CliError::Numerical(e.to_string()),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn load_config(common: &CommonConfig) -> Result<FileConfig, CliError> {
    match &common.config {
        None => Ok(FileConfig::default()),
        Some(path) => Ok(io::parse_config(&read_to_string(path)?)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MONOPROJ_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Project(args) => cmd_project(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let dim = args.dim.or(file.dim).unwrap_or(1);
    let truth = args
        .truth
        .or(file.truth)
        .ok_or_else(|| CliError::Validation("--truth is required".into()))?;
    let sigma = args.sigma.or(file.sigma).unwrap_or(1.0);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let model = args.model.or(file.model).unwrap_or_else(|| "gaussian".into());
    let binary = match model.as_str() {
        "gaussian" => false,
        "probit" => true,
        other => {
            return Err(CliError::Validation(format!(
                "unknown model `{other}` (expected gaussian or probit)"
            )))
        }
    };

    let sim = match dim {
        1 => {
            let n = args.n.or(file.n).unwrap_or(100);
            let design = Design::from_id(
                &args.design.or(file.design).unwrap_or_else(|| "equidistant".into()),
            )?;
            let t = CurveTruth::from_id(&truth)?;
            if binary {
                simulate_curve_binary(t, n, design, seed)?
            } else {
                simulate_curve(t, n, sigma, design, seed)?
            }
        }
        2 => {
            let m1 = args.m1.or(file.m1).unwrap_or(32);
            let m2 = args.m2.or(file.m2).unwrap_or(32);
            let t = SurfaceTruth::from_id(&truth)?;
            if binary {
                simulate_surface_binary(t, m1, m2, seed)?
            } else {
                simulate_surface(t, m1, m2, sigma, seed)?
            }
        }
        d => {
            return Err(CliError::Validation(format!(
                "simulate supports dim 1 or 2, got {d}"
            )))
        }
    };

    let ds = Dataset {
        xs: sim.xs,
        y: sim.y,
        weights: None,
        trials: None,
    };
    write_file(&args.out, &io::write_dataset(&ds))?;
    log::info!(
        "wrote {} rows ({} truth, seed {seed}) to {}",
        ds.len(),
        sim.truth,
        args.out.display()
    );
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let jobs = args.jobs.or(file.jobs).unwrap_or(1);
    init_thread_pool(jobs)?;

    let ds = io::parse_dataset(read_to_string(&args.data)?.as_bytes())?;
    if let Some(dim) = args.dim.or(file.dim) {
        if dim != ds.dim() {
            return Err(CliError::Validation(format!(
                "--dim {dim} does not match the {}-dimensional data file",
                ds.dim()
            )));
        }
    }
    let model = Model::from_id(
        &args
            .model
            .or_else(|| file.model.clone())
            .unwrap_or_else(|| "gaussian".into()),
    )?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mut opts = if ds.dim() == 1 {
        FitOptions::curves(seed)
    } else {
        FitOptions::surfaces(seed)
    };
    opts.model = model;
    opts.level = args.level.or(file.level).unwrap_or(0.99);
    if let Some(iters) = args.iters.or(file.iters) {
        opts.mcmc.n_iter = iters;
    }
    if let Some(burnin) = args.burnin.or(file.burnin) {
        opts.mcmc.burn_in = burnin;
    }
    opts.tol_mono = args.tol.or(file.tol_mono).unwrap_or(1e-8);
    opts.max_proj_iter = args.max_iter.or(file.max_proj_iter).unwrap_or(1000);
    apply_mcmc_overrides(&mut opts.mcmc, &file);

    let fit = pipeline::fit_dataset(&ds, &opts)?;

    let estimate_path = suffixed(&args.out, "estimate.csv");
    let diagnostics_path = suffixed(&args.out, "diagnostics.json");
    write_file(&estimate_path, &io::write_estimate(&fit.summary))?;
    let json = serde_json::to_string_pretty(&fit.diagnostics)
        .map_err(|e| CliError::Numerical(format!("cannot serialize diagnostics: {e}")))?;
    write_file(&diagnostics_path, &format!("{json}\n"))?;
    log::info!(
        "fit complete: sigma_bar = {:.4}, outputs {} and {}",
        fit.summary.sigma_bar,
        estimate_path.display(),
        diagnostics_path.display()
    );
    Ok(())
}

fn apply_mcmc_overrides(cfg: &mut McmcConfig, file: &FileConfig) {
    if let Some(v) = file.step_beta {
        cfg.step_beta = v;
    }
    if let Some(v) = file.step_gamma {
        cfg.step_gamma = v;
    }
    if let Some(v) = file.step_sigma {
        cfg.step_sigma = v;
    }
    if let Some(v) = file.adapt {
        cfg.adapt = v;
    }
    if let Some(v) = file.beta_shape {
        cfg.beta_prior.shape = v;
    }
    if let Some(v) = file.beta_rate {
        cfg.beta_prior.rate = v;
    }
    if let Some(v) = file.gamma_shape {
        cfg.gamma_prior.shape = v;
    }
    if let Some(v) = file.gamma_rate {
        cfg.gamma_prior.rate = v;
    }
    if let Some(v) = file.precision_shape {
        cfg.precision_prior.shape = v;
    }
    if let Some(v) = file.precision_rate {
        cfg.precision_prior.rate = v;
    }
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map_or_else(String::new, |n| {
        n.to_string_lossy().into_owned()
    });
    if !name.is_empty() {
        name.push('.');
    }
    name.push_str(suffix);
    prefix.with_file_name(name)
}

fn init_thread_pool(jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

fn cmd_project(args: ProjectArgs) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let tol = args.tol.or(file.tol_mono).unwrap_or(1e-8);
    let max_iter = args.max_iter.or(file.max_proj_iter).unwrap_or(1000);
    let ds = io::parse_dataset(read_to_string(&args.data)?.as_bytes())?;

    match ds.dim() {
        1 => {
            // sort by x, keep weights aligned
            let mut order: Vec<usize> = (0..ds.len()).collect();
            order.sort_by(|&a, &b| ds.xs[a][0].partial_cmp(&ds.xs[b][0]).unwrap());
            let points: Vec<f64> = order.iter().map(|&i| ds.xs[i][0]).collect();
            let values: Vec<f64> = order.iter().map(|&i| ds.y[i]).collect();
            let weights = ds
                .weights
                .as_ref()
                .map(|w| order.iter().map(|&i| w[i]).collect::<Vec<_>>());
            let f = match &weights {
                Some(w) => GridFunction::with_weights(points.clone(), values, w.clone()),
                None => GridFunction::new(points.clone(), values),
            }
            .map_err(|e| CliError::Validation(e.to_string()))?;
            let projected = monoproj::pava::pava_project(&f);
            let xs: Vec<Vec<f64>> = points.iter().map(|x| vec![*x]).collect();
            write_file(
                &args.out,
                &io::write_projected(&xs, projected.values(), weights.as_deref()),
            )?;
        }
        2 | 3 => {
            let layout = detect_lattice(&ds.xs).ok_or_else(|| {
                CliError::Validation(
                    "projection input must form a complete rectangular lattice".into(),
                )
            })?;
            let values = layout.gather(&ds.y);
            let mut grid_rows = Vec::with_capacity(values.len());
            cartesian(&layout.axes, &mut grid_rows);
            let (projected, iterations, violation) = if layout.axes.len() == 2 {
                let grid = SurfaceGrid::new(
                    layout.axes[0].clone(),
                    layout.axes[1].clone(),
                    values,
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                let r = project_surface(&grid, tol, max_iter)?;
                if !r.converged {
                    log::warn!(
                        "projection did not converge within {max_iter} iterations \
                         (violation {:.3e})",
                        r.max_violation
                    );
                }
                (r.result.values().to_vec(), r.iterations, r.max_violation)
            } else {
                let grid = LatticeGrid::new(layout.axes.clone(), values)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                let r = project_lattice(&grid, tol, max_iter)?;
                (r.result.values().to_vec(), r.iterations, r.max_violation)
            };
            println!("iterations: {iterations}");
            println!("max_violation: {violation:e}");
            write_file(&args.out, &io::write_projected(&grid_rows, &projected, None))?;
        }
        d => {
            return Err(CliError::Validation(format!(
                "projection supports 1 to 3 covariates, got {d}"
            )))
        }
    }
    Ok(())
}

fn cartesian(axes: &[Vec<f64>], out: &mut Vec<Vec<f64>>) {
    let mut row = vec![0.0; axes.len()];
    fn rec(axes: &[Vec<f64>], k: usize, row: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k == axes.len() {
            out.push(row.clone());
            return;
        }
        for v in &axes[k] {
            row[k] = *v;
            rec(axes, k + 1, row, out);
        }
    }
    rec(axes, 0, &mut row, out);
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let seed = args.seed.or(file.seed).ok_or_else(|| {
        CliError::Validation("--seed is required for benchmark runs".into())
    })?;
    let truths = match args.truths {
        None => CurveTruth::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|id| CurveTruth::from_id(id.trim()))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let cfg = BenchmarkConfig {
        truths: truths.into_iter().map(CurveTruthId).collect(),
        n: args.n.or(file.n).unwrap_or(100),
        sigma: args.sigma.or(file.sigma).unwrap_or(1.0),
        replicates: args.replicates.or(file.replicates).unwrap_or(10),
        seed,
        jobs: args.jobs.or(file.jobs).unwrap_or(1),
        mcmc_iters: args.iters.or(file.iters).unwrap_or(5000),
        mcmc_burnin: args.burnin.or(file.burnin).unwrap_or(1000),
    };
    let rows = benchmark::run_benchmark(&cfg)?;
    write_file(&args.out, &benchmark::write_benchmark_csv(&rows))?;
    for row in &rows {
        log::info!(
            "{:<12} {:<14} rmse {:.4} (se {:.4}, {} replicates, {} failed)",
            row.truth,
            row.method,
            row.rmse_mean,
            row.rmse_se,
            row.replicates,
            row.failed
        );
    }
    Ok(())
}
