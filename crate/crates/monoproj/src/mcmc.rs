//! Posterior samplers for the unconstrained GP: Gaussian-response and binary
//! probit-response models.
//!
//! One chain alternates
//! 1. random-walk Metropolis on `log beta` and each `log gamma_k`, targeting
//!    the marginal likelihood of the data with the latent path integrated out
//!    analytically, under Ga(shape, rate) priors on the natural scale;
//! 2. for the Gaussian model, Metropolis on `log sigma^2` with a
//!    Ga(shape, rate) prior on `sigma^{-2}`;
//! 3. an exact Gibbs draw of the latent values `w(X)` from their Gaussian
//!    conditional.
//!
//! The probit model replaces step 2 by truncated-normal data augmentation
//! (`sigma` is fixed at 1 for identification): per-trial auxiliaries are
//! drawn around the current latent value and their per-point means enter the
//! Gaussian machinery with noise variance `1/trials`.
//!
//! Chains are deterministic: the same data, configuration and seed yield
//! bit-identical draws. Step sizes adapt toward 0.44 acceptance during
//! burn-in only; the post-burn-in kernel is fixed.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

use crate::gp::kron::{detect_lattice, AxisEigenSolver, LatticeLayout};
use crate::gp::{self, GpError, KernelParams};

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("data length mismatch: {what} has length {got}, expected {expected}")]
    DataLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("a single observation is not enough to fit; supply none (prior mode) or at least two")]
    SingleObservation,
    #[error("non-finite data at index {0}")]
    NonFiniteData(usize),
    #[error("trials must be at least 1 and successes must not exceed trials (index {0})")]
    BadTrials(usize),
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("too few retained draws: {got} (need at least {need})")]
    TooFewDraws { got: usize, need: usize },
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Shape/rate Gamma prior.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    /// Log density (up to a constant) of `u = log X` when `X ~ Ga(shape, rate)`.
    fn log_density_log_scale(&self, u: f64) -> f64 {
        self.shape * u - self.rate * u.exp()
    }
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self::new(4.0, 1.0)
    }
}

/// Chain configuration. `step_*` are the standard deviations of the
/// log-scale random walks; a step of exactly 0 freezes that block (used by
/// the conjugate-exactness checks).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub beta_prior: GammaPrior,
    /// Prior on each length-scale rate `gamma_k`, interpreted in the
    /// original covariate units (the kernel is
    /// `beta^{-1} exp(-sum_k gamma_k (x_k - x_k')^2)` on the raw scale).
    pub gamma_prior: GammaPrior,
    /// Prior on the noise precision `sigma^{-2}`.
    pub precision_prior: GammaPrior,
    pub step_beta: f64,
    pub step_gamma: f64,
    pub step_sigma: f64,
    pub adapt: bool,
}

impl McmcConfig {
    /// Curve schedule: 5,000 iterations, 1,000 burn-in.
    pub fn curves(seed: u64) -> Self {
        Self {
            n_iter: 5000,
            burn_in: 1000,
            seed,
            beta_prior: GammaPrior::default(),
            gamma_prior: GammaPrior::default(),
            precision_prior: GammaPrior::default(),
            step_beta: 0.8,
            step_gamma: 0.8,
            step_sigma: 0.8,
            adapt: true,
        }
    }

    /// Surface schedule: 3,000 iterations, 500 burn-in.
    pub fn surfaces(seed: u64) -> Self {
        Self {
            n_iter: 3000,
            burn_in: 500,
            ..Self::curves(seed)
        }
    }

    fn validate(&self) -> Result<(), McmcError> {
        if self.burn_in >= self.n_iter {
            return Err(McmcError::InvalidConfig(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        for p in [&self.beta_prior, &self.gamma_prior, &self.precision_prior] {
            if !(p.shape > 0.0) || !(p.rate > 0.0) {
                return Err(McmcError::InvalidConfig(
                    "prior shapes and rates must be positive".into(),
                ));
            }
        }
        for s in [self.step_beta, self.step_gamma, self.step_sigma] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(McmcError::InvalidConfig(
                    "step sizes must be finite and non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Proposal counts for one Metropolis block.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlockAcceptance {
    pub name: String,
    pub proposed: usize,
    pub accepted: usize,
}

impl BlockAcceptance {
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Post-burn-in draws of the latent path and hyperparameter traces.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    /// One latent vector per retained iteration, in data order.
    pub latent: Vec<Vec<f64>>,
    pub beta_trace: Vec<f64>,
    /// One trace per input dimension.
    pub gamma_traces: Vec<Vec<f64>>,
    pub sigma_trace: Vec<f64>,
    /// Post-burn-in acceptance counts per Metropolis block.
    pub acceptance: Vec<BlockAcceptance>,
    /// Step sizes in force after burn-in (post-adaptation).
    pub step_sizes: Vec<f64>,
    pub seed: u64,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.beta_trace.len()
    }

    pub fn acceptance_rates(&self) -> Vec<(String, Option<f64>)> {
        self.acceptance
            .iter()
            .map(|b| (b.name.clone(), b.rate()))
            .collect()
    }
}

/// Deterministic per-replicate seed stream: splitmix64 applied to
/// `root + (index + 1) * golden`, the documented splitting rule for
/// concurrent replicates.
pub fn replicate_seed(root: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw from a standard normal truncated to `(a, inf)`. Direct rejection
/// when the region keeps decent mass; translated-exponential rejection
/// (Robert 1995) in the upper tail.
fn std_normal_above<R: Rng>(rng: &mut R, a: f64) -> f64 {
    if a <= 0.45 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                return z;
            }
        }
    } else {
        let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = rng.sample(Exp1);
            let x = a + e / lambda;
            let d = x - lambda;
            let u: f64 = rng.random();
            if u <= (-0.5 * d * d).exp() {
                return x;
            }
        }
    }
}

/// `N(mean, 1)` truncated to the positive (or negative) half-line.
fn truncated_normal<R: Rng>(rng: &mut R, mean: f64, positive: bool) -> f64 {
    if positive {
        mean + std_normal_above(rng, -mean)
    } else {
        mean - std_normal_above(rng, mean)
    }
}

#[derive(Clone)]
enum Noise {
    Scalar(f64),
    PerPoint(Vec<f64>),
}

impl Noise {
    fn as_vec(&self, n: usize) -> Vec<f64> {
        match self {
            Noise::Scalar(v) => vec![*v; n],
            Noise::PerPoint(v) => v.clone(),
        }
    }
}

/// Factorization backend for the latent Gaussian algebra.
enum Backend {
    /// Full lattice with homoscedastic noise: per-axis eigendecompositions.
    Lattice {
        solver: AxisEigenSolver,
        layout: LatticeLayout,
    },
    /// Arbitrary design, possibly heteroscedastic: dense Cholesky.
    Dense { x: Vec<Vec<f64>> },
    /// No observations: prior-only chain.
    Empty,
}

impl Backend {
    fn choose(x_norm: &[Vec<f64>], homoscedastic: bool) -> Result<Self, McmcError> {
        if x_norm.is_empty() {
            return Ok(Backend::Empty);
        }
        if homoscedastic {
            if let Some(layout) = detect_lattice(x_norm) {
                let gammas = vec![1.0; layout.axes.len()];
                let solver = AxisEigenSolver::new(layout.axes.clone(), &gammas)?;
                return Ok(Backend::Lattice { solver, layout });
            }
        }
        Ok(Backend::Dense { x: x_norm.to_vec() })
    }

    /// Marginal log likelihood; does not mutate cached factorizations, so
    /// proposal evaluations are cheap to discard.
    fn log_marginal(
        &self,
        y: &[f64],
        beta: f64,
        gammas: &[f64],
        noise: &Noise,
    ) -> Result<f64, McmcError> {
        match self {
            Backend::Empty => Ok(0.0),
            Backend::Lattice { solver, layout } => {
                let sigma2 = match noise {
                    Noise::Scalar(v) => *v,
                    Noise::PerPoint(_) => unreachable!("lattice backend is homoscedastic"),
                };
                let y_lat = layout.gather(y);
                Ok(solver.log_marginal_at(gammas, &y_lat, beta, sigma2)?)
            }
            Backend::Dense { x } => {
                let params = KernelParams::new(beta, gammas.to_vec())?;
                let vars = noise.as_vec(y.len());
                Ok(gp::log_marginal(y, x, &params, &vars)?)
            }
        }
    }

    /// Commits the cached spectrum to `gammas` (lattice backend only) so
    /// subsequent draws and cached-likelihood refreshes run on the fast path.
    fn commit_gammas(&mut self, gammas: &[f64]) {
        if let Backend::Lattice { solver, .. } = self {
            sync_solver(solver, gammas);
        }
    }

    fn draw_latent<R: Rng>(
        &mut self,
        y: &[f64],
        beta: f64,
        gammas: &[f64],
        noise: &Noise,
        rng: &mut R,
    ) -> Result<Vec<f64>, McmcError> {
        match self {
            Backend::Empty => Ok(Vec::new()),
            Backend::Lattice { solver, layout } => {
                let sigma2 = match noise {
                    Noise::Scalar(v) => *v,
                    Noise::PerPoint(_) => unreachable!("lattice backend is homoscedastic"),
                };
                sync_solver(solver, gammas);
                let y_lat = layout.gather(y);
                let draw = solver.posterior_draw(&y_lat, beta, sigma2, rng);
                Ok(layout.scatter(&draw))
            }
            Backend::Dense { x } => {
                let params = KernelParams::new(beta, gammas.to_vec())?;
                let vars = noise.as_vec(y.len());
                let state = gp::latent_conditional_hetero(y, x, &params, &vars)?;
                Ok(state.sample(rng).iter().copied().collect())
            }
        }
    }
}

fn sync_solver(solver: &mut AxisEigenSolver, gammas: &[f64]) {
    for (k, g) in gammas.iter().enumerate() {
        if solver.gammas()[k] != *g {
            solver.set_gamma(k, *g);
        }
    }
}

/// Which chain state a Metropolis block moves.
#[derive(Clone, Copy, PartialEq)]
enum BlockKind {
    Beta,
    Gamma(usize),
    Sigma2,
}

/// One log-scale random-walk Metropolis block with burn-in-only adaptation
/// toward 0.44 acceptance. Within a batch the acceptance rate is computed
/// over the most recent `ADAPT_BATCH` proposals.
struct MhBlock {
    name: String,
    kind: BlockKind,
    step: f64,
    batches_done: usize,
    batch_proposed: usize,
    batch_accepted: usize,
    post_proposed: usize,
    post_accepted: usize,
}

const ADAPT_BATCH: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.44;

impl MhBlock {
    fn new(name: String, kind: BlockKind, step: f64) -> Self {
        Self {
            name,
            kind,
            step,
            batches_done: 0,
            batch_proposed: 0,
            batch_accepted: 0,
            post_proposed: 0,
            post_accepted: 0,
        }
    }

    fn record(&mut self, accepted: bool, in_burn_in: bool, adapt: bool) {
        if in_burn_in {
            self.batch_proposed += 1;
            self.batch_accepted += accepted as usize;
            if adapt && self.batch_proposed == ADAPT_BATCH {
                self.batches_done += 1;
                let rate = self.batch_accepted as f64 / self.batch_proposed as f64;
                let delta = (self.batches_done as f64).powf(-0.5).min(0.25);
                if rate > TARGET_ACCEPTANCE {
                    self.step *= delta.exp();
                } else {
                    self.step *= (-delta).exp();
                }
                self.batch_proposed = 0;
                self.batch_accepted = 0;
            }
        } else {
            self.post_proposed += 1;
            self.post_accepted += accepted as usize;
        }
    }

    fn into_acceptance(self) -> BlockAcceptance {
        BlockAcceptance {
            name: self.name,
            proposed: self.post_proposed,
            accepted: self.post_accepted,
        }
    }
}

/// Gaussian-response chain: exact latent Gibbs plus marginalized Metropolis
/// on the hyperparameters. `y` may be empty (prior-only mode, used for
/// sampler validation); a single observation is rejected.
pub fn fit_gaussian(
    y: &[f64],
    x: &[Vec<f64>],
    config: &McmcConfig,
) -> Result<PosteriorDraws, McmcError> {
    config.validate()?;
    if y.len() != x.len() {
        return Err(McmcError::DataLength {
            what: "responses",
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.len() == 1 {
        return Err(McmcError::SingleObservation);
    }
    for (i, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(McmcError::NonFiniteData(i));
        }
    }
    run_chain(y, x, config, Model::Gaussian)
}

/// Probit-response chain for binary or binomial data: `y[i]` successes out
/// of `trials[i]` at `x[i]`, `pr(success) = Phi(w(x))`. The noise scale is
/// fixed at 1, so `sigma_trace` is constant 1.
pub fn fit_probit(
    y: &[u32],
    trials: &[u32],
    x: &[Vec<f64>],
    config: &McmcConfig,
) -> Result<PosteriorDraws, McmcError> {
    config.validate()?;
    if y.len() != x.len() {
        return Err(McmcError::DataLength {
            what: "responses",
            expected: x.len(),
            got: y.len(),
        });
    }
    if trials.len() != x.len() {
        return Err(McmcError::DataLength {
            what: "trials",
            expected: x.len(),
            got: trials.len(),
        });
    }
    if y.len() == 1 {
        return Err(McmcError::SingleObservation);
    }
    for i in 0..y.len() {
        if trials[i] < 1 || y[i] > trials[i] {
            return Err(McmcError::BadTrials(i));
        }
    }
    let y_dummy = vec![0.0; x.len()];
    run_chain(&y_dummy, x, config, Model::Probit { successes: y, trials })
}

enum Model<'a> {
    Gaussian,
    Probit {
        successes: &'a [u32],
        trials: &'a [u32],
    },
}

fn run_chain(
    y: &[f64],
    x: &[Vec<f64>],
    config: &McmcConfig,
    model: Model<'_>,
) -> Result<PosteriorDraws, McmcError> {
    let n = x.len();
    let dim = if n == 0 { 1 } else { x[0].len() };
    if n > 0 {
        if dim == 0 {
            return Err(McmcError::InvalidConfig("design points are empty".into()));
        }
        for p in x {
            if p.len() != dim {
                return Err(McmcError::DataLength {
                    what: "design point",
                    expected: dim,
                    got: p.len(),
                });
            }
        }
    }
    let probit = matches!(model, Model::Probit { .. });

    // Covariates are normalized to [0,1]^p before kernel evaluation, but
    // the length-scale priors describe gamma in ORIGINAL units (the kernel
    // is exp(-gamma (x - x')^2) on the raw covariates). Equivalence is kept
    // by scaling gamma with the squared domain span per dimension when the
    // kernel is evaluated on normalized coordinates.
    let (x_norm, gamma_scale) = if n == 0 {
        (Vec::new(), vec![1.0; dim])
    } else {
        let map = gp::DomainMap::fit(x)?;
        let scale = map
            .spans()
            .iter()
            .map(|s| if *s > 0.0 { s * s } else { 1.0 })
            .collect();
        (map.forward(x), scale)
    };

    // probit noise is fixed (variance 1/trials on the auxiliary means);
    // Gaussian noise follows the sigma2 state
    let fixed_noise = match &model {
        Model::Gaussian => None,
        Model::Probit { trials, .. } => {
            if trials.iter().all(|&m| m == 1) {
                Some(Noise::Scalar(1.0))
            } else {
                Some(Noise::PerPoint(
                    trials.iter().map(|&m| 1.0 / m as f64).collect(),
                ))
            }
        }
    };
    let homoscedastic = matches!(fixed_noise, None | Some(Noise::Scalar(_)));
    let mut backend = Backend::choose(&x_norm, homoscedastic)?;

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    // initialize at the prior means
    let mut log_beta = (config.beta_prior.shape / config.beta_prior.rate).ln();
    let mut log_gammas = vec![(config.gamma_prior.shape / config.gamma_prior.rate).ln(); dim];
    let mut log_sigma2 = if probit {
        0.0
    } else {
        -(config.precision_prior.shape / config.precision_prior.rate).ln()
    };

    let mut blocks = Vec::new();
    blocks.push(MhBlock::new("beta".into(), BlockKind::Beta, config.step_beta));
    for k in 0..dim {
        blocks.push(MhBlock::new(
            format!("gamma{}", k + 1),
            BlockKind::Gamma(k),
            config.step_gamma,
        ));
    }
    if !probit {
        blocks.push(MhBlock::new(
            "sigma2".into(),
            BlockKind::Sigma2,
            config.step_sigma,
        ));
    }

    // Gaussian responses are standardized before fitting and the affine map
    // is inverted on every stored draw: the GP prior is zero-mean with
    // amplitude and noise priors calibrated to unit-variance data, so an
    // uncentered or unscaled response would have to be paid for through the
    // amplitude at every length scale. The probit path has no response
    // level to absorb and is left untouched.
    let (y_offset, y_scale) = if probit || n == 0 {
        (0.0, 1.0)
    } else {
        let m = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        (m, if var > 0.0 { var.sqrt() } else { 1.0 })
    };
    // working response: standardized y for Gaussian, auxiliary means for probit
    let mut resp: Vec<f64> = y.iter().map(|v| (v - y_offset) / y_scale).collect();
    let mut latent = vec![0.0f64; n];

    let retained = config.n_iter - config.burn_in;
    let mut out = PosteriorDraws {
        latent: Vec::with_capacity(retained),
        beta_trace: Vec::with_capacity(retained),
        gamma_traces: vec![Vec::with_capacity(retained); dim],
        sigma_trace: Vec::with_capacity(retained),
        acceptance: Vec::new(),
        step_sizes: Vec::new(),
        seed: config.seed,
    };

    // state holds log gamma in original units; the backend sees the
    // normalized-domain rates
    let exp_all = |ls: &[f64]| -> Vec<f64> {
        ls.iter()
            .zip(&gamma_scale)
            .map(|(g, sc)| g.exp() * sc)
            .collect()
    };
    let mut cur_ll: Option<f64> = None; // marginal log likelihood at the current state

    for iter in 0..config.n_iter {
        let in_burn_in = iter < config.burn_in;

        // probit: refresh auxiliaries around the current latent path,
        // invalidating the cached marginal likelihood
        if let Model::Probit { successes, trials } = &model {
            for i in 0..n {
                let m = trials[i];
                let succ = successes[i];
                let mut sum = 0.0;
                for t in 0..m {
                    sum += truncated_normal(&mut rng, latent[i], t < succ);
                }
                resp[i] = sum / m as f64;
            }
            cur_ll = None;
        }

        let mut noise_now = fixed_noise
            .clone()
            .unwrap_or_else(|| Noise::Scalar(log_sigma2.exp()));

        if cur_ll.is_none() {
            cur_ll = Some(backend.log_marginal(
                &resp,
                log_beta.exp(),
                &exp_all(&log_gammas),
                &noise_now,
            )?);
        }

        for block in &mut blocks {
            if block.step == 0.0 {
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();

            let (cur_u, prior) = match block.kind {
                BlockKind::Beta => (log_beta, &config.beta_prior),
                BlockKind::Gamma(k) => (log_gammas[k], &config.gamma_prior),
                BlockKind::Sigma2 => (log_sigma2, &config.precision_prior),
            };
            let prop_u = cur_u + block.step * z;

            // prior log density in the sampled (log) coordinate; sigma2's
            // prior lives on the precision, whose log is -log_sigma2
            let (prior_cur, prior_prop) = if block.kind == BlockKind::Sigma2 {
                (
                    prior.log_density_log_scale(-cur_u),
                    prior.log_density_log_scale(-prop_u),
                )
            } else {
                (
                    prior.log_density_log_scale(cur_u),
                    prior.log_density_log_scale(prop_u),
                )
            };

            let mut prop_beta = log_beta;
            let mut prop_gammas = log_gammas.clone();
            let mut prop_sigma2 = log_sigma2;
            match block.kind {
                BlockKind::Beta => prop_beta = prop_u,
                BlockKind::Gamma(k) => prop_gammas[k] = prop_u,
                BlockKind::Sigma2 => prop_sigma2 = prop_u,
            }
            let prop_noise = fixed_noise
                .clone()
                .unwrap_or_else(|| Noise::Scalar(prop_sigma2.exp()));
            let prop_ll = backend.log_marginal(
                &resp,
                prop_beta.exp(),
                &exp_all(&prop_gammas),
                &prop_noise,
            )?;

            let log_acc = prop_ll + prior_prop - cur_ll.unwrap() - prior_cur;
            let accepted = u.ln() < log_acc;
            if accepted {
                log_beta = prop_beta;
                log_gammas = prop_gammas;
                log_sigma2 = prop_sigma2;
                cur_ll = Some(prop_ll);
                noise_now = prop_noise;
                if matches!(block.kind, BlockKind::Gamma(_)) {
                    // commit the new spectrum and refresh the cached value on
                    // the committed route (the proposal may have been
                    // evaluated through the Cholesky shortcut, which agrees
                    // only to rounding)
                    backend.commit_gammas(&exp_all(&log_gammas));
                    cur_ll = Some(backend.log_marginal(
                        &resp,
                        log_beta.exp(),
                        &exp_all(&log_gammas),
                        &noise_now,
                    )?);
                }
            }
            block.record(accepted, in_burn_in, config.adapt);
        }

        latent = backend.draw_latent(
            &resp,
            log_beta.exp(),
            &exp_all(&log_gammas),
            &noise_now,
            &mut rng,
        )?;

        let beta = log_beta.exp();
        let sigma = (0.5 * log_sigma2).exp();
        if !beta.is_finite() || log_gammas.iter().any(|g| !g.exp().is_finite()) {
            return Err(McmcError::NonFinite {
                what: "hyperparameter",
                iteration: iter,
            });
        }
        if !sigma.is_finite() {
            return Err(McmcError::NonFinite {
                what: "sigma",
                iteration: iter,
            });
        }
        if latent.iter().any(|v| !v.is_finite()) {
            return Err(McmcError::NonFinite {
                what: "latent draw",
                iteration: iter,
            });
        }

        if !in_burn_in {
            out.latent
                .push(latent.iter().map(|v| y_offset + y_scale * v).collect());
            out.beta_trace.push(beta);
            for (k, g) in log_gammas.iter().enumerate() {
                out.gamma_traces[k].push(g.exp());
            }
            // sigma reported in original response units
            out.sigma_trace.push(if probit { 1.0 } else { y_scale * sigma });
        }
    }

    out.step_sizes = blocks.iter().map(|b| b.step).collect();
    out.acceptance = blocks.into_iter().map(MhBlock::into_acceptance).collect();
    Ok(out)
}

/// Effective sample size via the initial-positive-sequence estimator:
/// autocovariances are summed in consecutive pairs while the pair sums stay
/// positive. Returns `None` for (near-)constant traces.
pub fn ess(trace: &[f64]) -> Option<f64> {
    let n = trace.len();
    if n < 4 {
        return None;
    }
    let nf = n as f64;
    let mean = trace.iter().sum::<f64>() / nf;
    let var = trace.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    if var <= 1e-100 * (1.0 + mean * mean) {
        return None;
    }
    let rho = |k: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n - k {
            acc += (trace[i] - mean) * (trace[i + k] - mean);
        }
        acc / (nf * var)
    };
    let mut tail = 0.0;
    let mut k = 1;
    while k + 1 < n / 2 {
        let pair = rho(k) + rho(k + 1);
        if pair <= 0.0 {
            break;
        }
        tail += pair;
        k += 2;
    }
    Some(nf / (1.0 + 2.0 * tail))
}

/// Split-R-hat across the two halves of a single trace. `None` when the
/// within-half variance vanishes.
pub fn split_rhat(trace: &[f64]) -> Option<f64> {
    let half = trace.len() / 2;
    if half < 2 {
        return None;
    }
    let a = &trace[..half];
    let b = &trace[trace.len() - half..];
    let stats = |s: &[f64]| -> (f64, f64) {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let v = s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (s.len() - 1) as f64;
        (m, v)
    };
    let (ma, va) = stats(a);
    let (mb, vb) = stats(b);
    let w = 0.5 * (va + vb);
    if w <= 0.0 {
        return None;
    }
    let nf = half as f64;
    let bvar = nf * (ma - mb) * (ma - mb) / 2.0;
    let var_plus = (nf - 1.0) / nf * w + bvar / nf;
    Some((var_plus / w).sqrt())
}

/// Per-trace convergence summary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TraceDiagnostic {
    pub name: String,
    /// `None` flags a degenerate (constant) trace.
    pub ess: Option<f64>,
    pub rhat: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainDiagnostics {
    pub traces: Vec<TraceDiagnostic>,
    pub acceptance: Vec<BlockAcceptance>,
}

/// ESS and split-R-hat for every hyperparameter trace plus the block
/// acceptance counts. Requires at least 100 retained draws.
pub fn chain_diagnostics(draws: &PosteriorDraws) -> Result<ChainDiagnostics, McmcError> {
    if draws.n_draws() < 100 {
        return Err(McmcError::TooFewDraws {
            got: draws.n_draws(),
            need: 100,
        });
    }
    let mut traces = Vec::new();
    let mut push = |name: String, t: &[f64]| {
        traces.push(TraceDiagnostic {
            name,
            ess: ess(t),
            rhat: split_rhat(t),
        });
    };
    push("beta".into(), &draws.beta_trace);
    for (k, g) in draws.gamma_traces.iter().enumerate() {
        push(format!("gamma{}", k + 1), g);
    }
    push("sigma".into(), &draws.sigma_trace);
    Ok(ChainDiagnostics {
        traces,
        acceptance: draws.acceptance.clone(),
    })
}
