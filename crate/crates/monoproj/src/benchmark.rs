//! Replicated simulation benchmark: per-truth root mean squared error of the
//! plain GP estimate and of the projected estimate, averaged over
//! replicates with Monte Carlo standard errors.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::inference::{self, link_transform, Link};
use crate::mcmc::{self, replicate_seed, McmcConfig};
use crate::simgen::{simulate_curve, CurveTruth, Design, SimError};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkConfig {
    pub truths: Vec<CurveTruthId>,
    pub n: usize,
    pub sigma: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads for replicate-level parallelism (>= 1).
    pub jobs: usize,
    pub mcmc_iters: usize,
    pub mcmc_burnin: usize,
}

/// Serializable wrapper so configs echo cleanly.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveTruthId(#[serde(serialize_with = "ser_truth")] pub CurveTruth);

fn ser_truth<S: serde::Serializer>(t: &CurveTruth, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(t.id())
}

impl BenchmarkConfig {
    pub fn table1(seed: u64, replicates: usize, jobs: usize) -> Self {
        Self {
            truths: CurveTruth::ALL.iter().map(|t| CurveTruthId(*t)).collect(),
            n: 100,
            sigma: 1.0,
            replicates,
            seed,
            jobs,
            mcmc_iters: 5000,
            mcmc_burnin: 1000,
        }
    }
}

/// One row of the output table: a truth/method pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub truth: String,
    /// `gp` (posterior mean of the raw draws) or `gp_projection`
    /// (posterior mean of the projected draws).
    pub method: String,
    /// Replicates that completed.
    pub replicates: usize,
    /// Replicates dropped because the fit failed.
    pub failed: usize,
    pub rmse_mean: f64,
    pub rmse_se: f64,
}

struct ReplicateOutcome {
    rmse_raw: f64,
    rmse_projected: f64,
}

fn run_replicate(
    truth: CurveTruth,
    cfg: &BenchmarkConfig,
    seed: u64,
) -> Result<ReplicateOutcome, String> {
    let sim = simulate_curve(truth, cfg.n, cfg.sigma, Design::Equidistant, seed)
        .map_err(|e| e.to_string())?;
    let mut mcmc_cfg = McmcConfig::curves(seed);
    mcmc_cfg.n_iter = cfg.mcmc_iters;
    mcmc_cfg.burn_in = cfg.mcmc_burnin;
    let draws = mcmc::fit_gaussian(&sim.y, &sim.xs, &mcmc_cfg).map_err(|e| e.to_string())?;

    let x: Vec<f64> = sim.xs.iter().map(|p| p[0]).collect();
    let truth_vals: Vec<f64> = x
        .iter()
        .map(|xi| truth.value(*xi).expect("design stays in domain"))
        .collect();

    let transformed = link_transform(&draws.latent, Link::Identity);
    let mut raw_mean = vec![0.0; x.len()];
    for d in &transformed {
        for (m, v) in raw_mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    for m in &mut raw_mean {
        *m /= transformed.len() as f64;
    }

    let projected =
        inference::project_draws_curve(&transformed, &x, None).map_err(|e| e.to_string())?;
    let mut proj_mean = vec![0.0; x.len()];
    for d in &projected {
        for (m, v) in proj_mean.iter_mut().zip(d.values()) {
            *m += v;
        }
    }
    for m in &mut proj_mean {
        *m /= projected.len() as f64;
    }

    Ok(ReplicateOutcome {
        rmse_raw: inference::rmse(&raw_mean, &truth_vals).map_err(|e| e.to_string())?,
        rmse_projected: inference::rmse(&proj_mean, &truth_vals).map_err(|e| e.to_string())?,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the full benchmark. Replicates are parallelized over a dedicated
/// thread pool of `jobs` workers with one derived seed per (truth,
/// replicate); output is identical for any `jobs` value. Failed replicates
/// are excluded and counted.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>, BenchmarkError> {
    if cfg.replicates == 0 {
        return Err(BenchmarkError::InvalidConfig(
            "replicate count must be at least 1".into(),
        ));
    }
    if cfg.jobs == 0 {
        return Err(BenchmarkError::InvalidConfig(
            "jobs must be at least 1".into(),
        ));
    }
    if cfg.truths.is_empty() {
        return Err(BenchmarkError::InvalidConfig("no truths selected".into()));
    }

    let tasks: Vec<(usize, CurveTruth, u64)> = cfg
        .truths
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| {
            (0..cfg.replicates).map(move |r| {
                let index = (ti * cfg.replicates + r) as u64;
                (ti, t.0, replicate_seed(cfg.seed, index))
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| BenchmarkError::Pool(e.to_string()))?;
    let outcomes: Vec<(usize, Result<ReplicateOutcome, String>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(ti, truth, seed)| (*ti, run_replicate(*truth, cfg, *seed)))
            .collect()
    });

    let mut rows = Vec::with_capacity(cfg.truths.len() * 2);
    for (ti, truth) in cfg.truths.iter().enumerate() {
        let mut raw = Vec::new();
        let mut projected = Vec::new();
        let mut failed = 0usize;
        for (t, outcome) in &outcomes {
            if *t != ti {
                continue;
            }
            match outcome {
                Ok(o) => {
                    raw.push(o.rmse_raw);
                    projected.push(o.rmse_projected);
                }
                Err(msg) => {
                    log::warn!("replicate failed for {}: {msg}", truth.0.id());
                    failed += 1;
                }
            }
        }
        let (raw_mean, raw_se) = mean_and_se(&raw);
        let (proj_mean, proj_se) = mean_and_se(&projected);
        rows.push(BenchmarkRow {
            truth: truth.0.id().to_string(),
            method: "gp".into(),
            replicates: raw.len(),
            failed,
            rmse_mean: raw_mean,
            rmse_se: raw_se,
        });
        rows.push(BenchmarkRow {
            truth: truth.0.id().to_string(),
            method: "gp_projection".into(),
            replicates: projected.len(),
            failed,
            rmse_mean: proj_mean,
            rmse_se: proj_se,
        });
    }
    Ok(rows)
}

/// Serializes benchmark rows in the documented CSV schema.
pub fn write_benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("truth,method,replicates,failed,rmse_mean,rmse_se\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.truth,
            r.method,
            r.replicates,
            r.failed,
            crate::io::fmt_float(r.rmse_mean),
            crate::io::fmt_float(r.rmse_se),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(jobs: usize) -> BenchmarkConfig {
        BenchmarkConfig {
            truths: vec![CurveTruthId(CurveTruth::Flat), CurveTruthId(CurveTruth::Linear)],
            n: 30,
            sigma: 1.0,
            replicates: 2,
            seed: 77,
            jobs,
            mcmc_iters: 300,
            mcmc_burnin: 100,
        }
    }

    #[test]
    fn deterministic_across_job_counts() {
        let a = run_benchmark(&tiny_config(1)).unwrap();
        let b = run_benchmark(&tiny_config(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].method, "gp");
        assert_eq!(a[1].method, "gp_projection");
        assert!(a.iter().all(|r| r.failed == 0 && r.replicates == 2));
        assert!(a.iter().all(|r| r.rmse_mean.is_finite() && r.rmse_mean > 0.0));
    }

    #[test]
    fn rejects_degenerate_configs() {
        let mut cfg = tiny_config(1);
        cfg.replicates = 0;
        assert!(run_benchmark(&cfg).is_err());
        let mut cfg = tiny_config(1);
        cfg.jobs = 0;
        assert!(run_benchmark(&cfg).is_err());
        let mut cfg = tiny_config(1);
        cfg.truths.clear();
        assert!(run_benchmark(&cfg).is_err());
    }

    #[test]
    fn csv_schema() {
        let rows = run_benchmark(&tiny_config(2)).unwrap();
        let text = write_benchmark_csv(&rows);
        assert!(text.starts_with("truth,method,replicates,failed,rmse_mean,rmse_se\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
