//! End-to-end fitting: run the sampler on a dataset, project every retained
//! draw onto the monotone cone, and summarize into an estimate with bands
//! and machine-readable diagnostics.

use serde::Serialize;
use thiserror::Error;

use crate::gp::kron::detect_lattice;
use crate::inference::{
    self, link_transform, FitSummary, InferenceError, Link, SurfaceProjectionStats,
};
use crate::io::Dataset;
use crate::mcmc::{self, ChainDiagnostics, McmcConfig, McmcError, PosteriorDraws};
use crate::proj2d::{project_lattice, Proj2dError};
use crate::LatticeGrid;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Projection(#[from] Proj2dError),
    #[error(transparent)]
    Grid(#[from] crate::GridError),
}

/// Observation model for [`fit_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gaussian,
    Probit,
}

impl Model {
    pub fn from_id(id: &str) -> Result<Self, PipelineError> {
        match id {
            "gaussian" => Ok(Model::Gaussian),
            "probit" => Ok(Model::Probit),
            other => Err(PipelineError::InvalidData(format!(
                "unknown model `{other}` (expected gaussian or probit)"
            ))),
        }
    }
}

/// Everything a fit needs besides the data.
#[derive(Debug, Clone, Serialize)]
pub struct FitOptions {
    pub model: Model,
    /// Credible level of the pointwise bands.
    pub level: f64,
    pub mcmc: McmcConfig,
    pub tol_mono: f64,
    pub max_proj_iter: usize,
}

impl FitOptions {
    pub fn curves(seed: u64) -> Self {
        Self {
            model: Model::Gaussian,
            level: 0.99,
            mcmc: McmcConfig::curves(seed),
            tol_mono: 1e-8,
            max_proj_iter: 1000,
        }
    }

    pub fn surfaces(seed: u64) -> Self {
        Self {
            mcmc: McmcConfig::surfaces(seed),
            ..Self::curves(seed)
        }
    }
}

/// Machine-readable fit diagnostics, echoed into the diagnostics JSON.
#[derive(Debug, Clone, Serialize)]
pub struct FitDiagnostics {
    pub model: Model,
    pub dim: usize,
    pub n_obs: usize,
    pub n_draws: usize,
    pub seed: u64,
    pub level: f64,
    pub sigma_bar: f64,
    pub chain: ChainDiagnostics,
    pub projection: Option<SurfaceProjectionStats>,
    pub config: FitOptions,
}

/// A completed fit: the posterior summary plus diagnostics; raw draws are
/// retained for downstream analyses.
#[derive(Debug)]
pub struct FitResult {
    pub summary: FitSummary,
    pub diagnostics: FitDiagnostics,
    pub draws: PosteriorDraws,
    /// Unprojected posterior mean on the same grid as the summary (the
    /// plain GP estimate, before any monotonicity correction).
    pub unprojected_mean: Vec<f64>,
}

fn pointwise_mean(draws: &[Vec<f64>]) -> Vec<f64> {
    let n = draws[0].len();
    let mut mean = vec![0.0; n];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= draws.len() as f64;
    }
    mean
}

fn link_of(model: Model) -> Link {
    match model {
        Model::Gaussian => Link::Identity,
        Model::Probit => Link::Probit,
    }
}

fn run_sampler(ds: &Dataset, opts: &FitOptions) -> Result<PosteriorDraws, PipelineError> {
    match opts.model {
        Model::Gaussian => Ok(mcmc::fit_gaussian(&ds.y, &ds.xs, &opts.mcmc)?),
        Model::Probit => {
            let trials = ds
                .trials
                .clone()
                .unwrap_or_else(|| vec![1; ds.len()]);
            let mut successes = Vec::with_capacity(ds.len());
            for (i, v) in ds.y.iter().enumerate() {
                if v.fract() != 0.0 || *v < 0.0 || *v > trials[i] as f64 {
                    return Err(PipelineError::InvalidData(format!(
                        "probit responses must be integer successes in 0..=trials; row {} has y = {v}",
                        i + 1
                    )));
                }
                successes.push(*v as u32);
            }
            Ok(mcmc::fit_probit(&successes, &trials, &ds.xs, &opts.mcmc)?)
        }
    }
}

/// Fits a monotone curve or surface to a dataset. 1-D designs are sorted by
/// the covariate; designs with 2 or 3 covariates must form a complete
/// lattice (the partial-order projection is defined on lattices).
pub fn fit_dataset(ds: &Dataset, opts: &FitOptions) -> Result<FitResult, PipelineError> {
    match ds.dim() {
        0 => Err(PipelineError::InvalidData("dataset has no covariates".into())),
        1 => fit_curve(ds, opts),
        2 | 3 => fit_on_lattice(ds, opts),
        d => Err(PipelineError::InvalidData(format!(
            "{d} covariate dimensions are not supported (max 3)"
        ))),
    }
}

fn fit_curve(ds: &Dataset, opts: &FitOptions) -> Result<FitResult, PipelineError> {
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ds.xs[a][0].partial_cmp(&ds.xs[b][0]).unwrap());
    let x_sorted: Vec<f64> = order.iter().map(|&i| ds.xs[i][0]).collect();
    for w in x_sorted.windows(2) {
        if w[0] == w[1] {
            return Err(PipelineError::InvalidData(format!(
                "duplicate covariate value {}; the projection grid must be strictly increasing",
                w[0]
            )));
        }
    }
    let sorted = Dataset {
        xs: order.iter().map(|&i| ds.xs[i].clone()).collect(),
        y: order.iter().map(|&i| ds.y[i]).collect(),
        weights: ds
            .weights
            .as_ref()
            .map(|w| order.iter().map(|&i| w[i]).collect()),
        trials: ds
            .trials
            .as_ref()
            .map(|t| order.iter().map(|&i| t[i]).collect()),
    };

    let draws = run_sampler(&sorted, opts)?;
    let chain = mcmc::chain_diagnostics(&draws)?;
    let transformed = link_transform(&draws.latent, link_of(opts.model));
    let projected =
        inference::project_draws_curve(&transformed, &x_sorted, sorted.weights.as_deref())?;
    let mut summary = inference::summarize_curves(&projected, &draws.sigma_trace, opts.level)?;
    summary.diagnostics = Some(inference::fit_report(&summary, &sorted.y, None)?);

    let diagnostics = FitDiagnostics {
        model: opts.model,
        dim: 1,
        n_obs: n,
        n_draws: draws.n_draws(),
        seed: opts.mcmc.seed,
        level: opts.level,
        sigma_bar: summary.sigma_bar,
        chain,
        projection: None,
        config: opts.clone(),
    };
    Ok(FitResult {
        unprojected_mean: pointwise_mean(&transformed),
        summary,
        diagnostics,
        draws,
    })
}

fn fit_on_lattice(ds: &Dataset, opts: &FitOptions) -> Result<FitResult, PipelineError> {
    let layout = detect_lattice(&ds.xs).ok_or_else(|| {
        PipelineError::InvalidData(
            "multi-dimensional designs must form a complete rectangular lattice".into(),
        )
    })?;
    if ds.weights.is_some() {
        return Err(PipelineError::InvalidData(
            "per-point weights are only supported for 1-D data".into(),
        ));
    }
    let draws = run_sampler(ds, opts)?;
    let chain = mcmc::chain_diagnostics(&draws)?;
    let transformed = link_transform(&draws.latent, link_of(opts.model));
    // reorder each draw from data order to row-major lattice order
    let lattice_draws: Vec<Vec<f64>> = transformed.iter().map(|d| layout.gather(d)).collect();

    let (summary, projection, projected_lattice) = if layout.axes.len() == 2 {
        let (projected, stats) = inference::project_draws_surface(
            &lattice_draws,
            &layout.axes[0],
            &layout.axes[1],
            opts.tol_mono,
            opts.max_proj_iter,
        )?;
        let mut summary =
            inference::summarize_surfaces(&projected, &draws.sigma_trace, opts.level)?;
        let y_lattice = layout.gather(&ds.y);
        summary.diagnostics = Some(inference::fit_report(&summary, &y_lattice, None)?);
        (summary, stats, None::<Vec<Vec<f64>>>)
    } else {
        // 3 axes: cyclic lattice projection, flat summaries
        let mut projected = Vec::with_capacity(lattice_draws.len());
        let mut stats = SurfaceProjectionStats {
            n_draws: lattice_draws.len(),
            n_nonconverged: 0,
            nonconverged: Vec::new(),
            max_iterations: 0,
            worst_violation: 0.0,
        };
        for (i, d) in lattice_draws.iter().enumerate() {
            let grid = LatticeGrid::new(layout.axes.clone(), d.clone())?;
            let r = project_lattice(&grid, opts.tol_mono, opts.max_proj_iter)?;
            if !r.converged {
                stats.n_nonconverged += 1;
                stats.nonconverged.push(i);
            }
            stats.max_iterations = stats.max_iterations.max(r.iterations);
            stats.worst_violation = stats.worst_violation.max(r.max_violation);
            projected.push(r.result.values().to_vec());
        }
        let mut grid_rows = Vec::with_capacity(projected[0].len());
        for s in &layout.axes[0] {
            for t in &layout.axes[1] {
                for u in &layout.axes[2] {
                    grid_rows.push(vec![*s, *t, *u]);
                }
            }
        }
        let mut summary =
            inference::summarize_flat(&projected, grid_rows, &draws.sigma_trace, opts.level)?;
        let y_lattice = layout.gather(&ds.y);
        summary.diagnostics = Some(inference::fit_report(&summary, &y_lattice, None)?);
        (summary, stats, Some(projected))
    };
    let _ = projected_lattice;

    let diagnostics = FitDiagnostics {
        model: opts.model,
        dim: layout.axes.len(),
        n_obs: ds.len(),
        n_draws: draws.n_draws(),
        seed: opts.mcmc.seed,
        level: opts.level,
        sigma_bar: summary.sigma_bar,
        chain,
        projection: Some(projection),
        config: opts.clone(),
    };
    Ok(FitResult {
        unprojected_mean: pointwise_mean(&lattice_draws),
        summary,
        diagnostics,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proj2d::is_bimonotone;
    use crate::simgen::{simulate_curve, simulate_surface, CurveTruth, Design, SurfaceTruth};
    use crate::SurfaceGrid;

    fn quick_opts(seed: u64) -> FitOptions {
        let mut opts = FitOptions::curves(seed);
        opts.mcmc.n_iter = 400;
        opts.mcmc.burn_in = 200;
        opts
    }

    #[test]
    fn curve_fit_produces_monotone_summary_within_bands() {
        let sim = simulate_curve(CurveTruth::Logistic, 40, 0.3, Design::Equidistant, 5).unwrap();
        let ds = Dataset {
            xs: sim.xs.clone(),
            y: sim.y.clone(),
            weights: None,
            trials: None,
        };
        let fit = fit_dataset(&ds, &quick_opts(5)).unwrap();
        assert_eq!(fit.summary.posterior_mean.len(), 40);
        for w in fit.summary.posterior_mean.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        for i in 0..40 {
            assert!(fit.summary.band_lower[i] <= fit.summary.posterior_mean[i] + 1e-9);
            assert!(fit.summary.band_upper[i] >= fit.summary.posterior_mean[i] - 1e-9);
        }
        assert!(fit.diagnostics.chain.traces.len() >= 3);
    }

    #[test]
    fn unsorted_input_is_sorted_and_duplicates_rejected() {
        let ds = Dataset {
            xs: vec![vec![2.0], vec![0.5], vec![1.0]],
            y: vec![3.0, 1.0, 2.0],
            weights: None,
            trials: None,
        };
        let fit = fit_dataset(&ds, &quick_opts(6)).unwrap();
        let xs: Vec<f64> = fit.summary.grid.iter().map(|r| r[0]).collect();
        assert_eq!(xs, vec![0.5, 1.0, 2.0]);

        let dup = Dataset {
            xs: vec![vec![1.0], vec![1.0]],
            y: vec![0.0, 1.0],
            weights: None,
            trials: None,
        };
        assert!(matches!(
            fit_dataset(&dup, &quick_opts(6)),
            Err(PipelineError::InvalidData(_))
        ));
    }

    #[test]
    fn surface_fit_is_bimonotone() {
        let sim = simulate_surface(SurfaceTruth::AdditiveLinear, 5, 5, 0.2, 8).unwrap();
        let ds = Dataset {
            xs: sim.xs.clone(),
            y: sim.y.clone(),
            weights: None,
            trials: None,
        };
        let mut opts = quick_opts(8);
        opts.mcmc = McmcConfig::surfaces(8);
        opts.mcmc.n_iter = 400;
        opts.mcmc.burn_in = 200;
        let fit = fit_dataset(&ds, &opts).unwrap();
        assert_eq!(fit.diagnostics.dim, 2);
        let grid = SurfaceGrid::new(
            (0..5).map(|i| i as f64 / 4.0).collect(),
            (0..5).map(|i| i as f64 / 4.0).collect(),
            fit.summary.posterior_mean.clone(),
        )
        .unwrap();
        let (ok, viol) = is_bimonotone(&grid, 1e-8);
        assert!(ok, "posterior mean violates bimonotonicity by {viol}");
        let stats = fit.diagnostics.projection.unwrap();
        assert_eq!(stats.n_draws, 200);
    }

    #[test]
    fn scattered_2d_design_is_rejected() {
        let ds = Dataset {
            xs: vec![vec![0.0, 0.0], vec![0.3, 0.7], vec![1.0, 0.2]],
            y: vec![0.0, 1.0, 2.0],
            weights: None,
            trials: None,
        };
        assert!(matches!(
            fit_dataset(&ds, &quick_opts(9)),
            Err(PipelineError::InvalidData(_))
        ));
    }

    #[test]
    fn probit_requires_integer_successes() {
        let ds = Dataset {
            xs: vec![vec![0.0], vec![1.0]],
            y: vec![0.5, 1.0],
            weights: None,
            trials: None,
        };
        let mut opts = quick_opts(10);
        opts.model = Model::Probit;
        assert!(matches!(
            fit_dataset(&ds, &opts),
            Err(PipelineError::InvalidData(_))
        ));
    }

    #[test]
    fn three_axis_lattice_fit_is_monotone_on_every_axis() {
        // 4x4x4 lattice, additive monotone truth
        let axis: Vec<f64> = (0..4).map(|i| i as f64 / 3.0).collect();
        let mut xs = Vec::new();
        let mut y = Vec::new();
        let mut k = 0usize;
        for s in &axis {
            for t in &axis {
                for u in &axis {
                    xs.push(vec![*s, *t, *u]);
                    // deterministic pseudo-noise keeps the test cheap
                    y.push(s + t + u + 0.1 * ((k * 37 % 11) as f64 / 11.0 - 0.5));
                    k += 1;
                }
            }
        }
        let ds = Dataset {
            xs,
            y,
            weights: None,
            trials: None,
        };
        let mut opts = quick_opts(12);
        opts.mcmc = McmcConfig::surfaces(12);
        opts.mcmc.n_iter = 300;
        opts.mcmc.burn_in = 150;
        let fit = fit_dataset(&ds, &opts).unwrap();
        assert_eq!(fit.diagnostics.dim, 3);
        assert_eq!(fit.summary.grid.len(), 64);
        // monotone along every axis of the row-major cube
        let m = 4usize;
        let v = &fit.summary.posterior_mean;
        let idx = |i: usize, j: usize, l: usize| (i * m + j) * m + l;
        for i in 0..m {
            for j in 0..m {
                for l in 0..m - 1 {
                    assert!(v[idx(i, j, l)] <= v[idx(i, j, l + 1)] + 1e-9);
                    assert!(v[idx(i, l, j)] <= v[idx(i, l + 1, j)] + 1e-9);
                    assert!(v[idx(l, i, j)] <= v[idx(l + 1, i, j)] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn probit_estimates_live_in_unit_interval() {
        let xs: Vec<Vec<f64>> = (1..=30).map(|i| vec![i as f64 / 3.0]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i >= 12) as u8 as f64).collect();
        let ds = Dataset {
            xs,
            y,
            weights: None,
            trials: None,
        };
        let mut opts = quick_opts(11);
        opts.model = Model::Probit;
        let fit = fit_dataset(&ds, &opts).unwrap();
        for v in fit
            .summary
            .posterior_mean
            .iter()
            .chain(&fit.summary.band_lower)
            .chain(&fit.summary.band_upper)
        {
            assert!((0.0..=1.0).contains(v), "value {v} outside [0,1]");
        }
        assert_eq!(fit.summary.sigma_bar, 1.0);
    }
}
