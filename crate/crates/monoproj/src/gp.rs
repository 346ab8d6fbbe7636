//! Squared-exponential Gaussian process machinery: Gram matrices, stable
//! factorizations, exact latent conditionals, and joint predictive draws.
//!
//! The kernel is `R(x1, x2) = beta^{-1} exp(-sum_k gamma_k (x1_k - x2_k)^2)`
//! with zero mean. Covariates are affinely mapped to `[0,1]^p` (see
//! [`DomainMap`]) before kernel evaluation.
//!
//! Two factorization routes back the samplers:
//! * dense Cholesky on arbitrary designs ([`latent_conditional`],
//!   [`log_marginal`]), with a nugget ladder for rank-deficient kernels;
//! * per-axis symmetric eigendecompositions on full lattices
//!   ([`kron::AxisEigenSolver`]), where the Gram matrix is a Kronecker
//!   product of the axis Grams and conditionals cost O(n * sum_k m_k)
//!   instead of O(n^3).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub mod kron;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("point dimension {got} does not match kernel dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel parameters must be strictly positive")]
    BadParams,
    #[error("factorization failed after nugget escalation up to {max_nugget:e}")]
    FactorizationFailed { max_nugget: f64 },
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("noise standard deviation must be strictly positive")]
    BadSigma,
    #[error("design must contain at least one point")]
    EmptyDesign,
}

/// Inverse marginal scale `beta` (kernel amplitude is `beta^{-1}`) and one
/// length-scale rate per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    beta: f64,
    gammas: Vec<f64>,
}

impl KernelParams {
    pub fn new(beta: f64, gammas: Vec<f64>) -> Result<Self, GpError> {
        if !(beta > 0.0) || !beta.is_finite() || gammas.is_empty() {
            return Err(GpError::BadParams);
        }
        if gammas.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(GpError::BadParams);
        }
        Ok(Self { beta, gammas })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    /// Kernel amplitude `beta^{-1}`, the marginal prior variance.
    pub fn amplitude(&self) -> f64 {
        1.0 / self.beta
    }
}

/// `beta^{-1} exp(-sum_k gamma_k (x1_k - x2_k)^2)`.
///
/// Panics if the point dimensions do not match the kernel dimension; callers
/// validate designs once at the public entry points.
pub fn se_kernel(x1: &[f64], x2: &[f64], params: &KernelParams) -> f64 {
    assert_eq!(x1.len(), params.dim(), "point dimension mismatch");
    assert_eq!(x2.len(), params.dim(), "point dimension mismatch");
    let mut expo = 0.0;
    for ((a, b), g) in x1.iter().zip(x2).zip(&params.gammas) {
        let d = a - b;
        expo += g * d * d;
    }
    params.amplitude() * (-expo).exp()
}

fn check_design(points: &[Vec<f64>], dim: usize) -> Result<(), GpError> {
    if points.is_empty() {
        return Err(GpError::EmptyDesign);
    }
    for p in points {
        if p.len() != dim {
            return Err(GpError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(())
}

/// `K[i][j] = se_kernel(p_i, p_j) + nugget * 1{i == j}`.
pub fn gram_matrix(
    points: &[Vec<f64>],
    params: &KernelParams,
    nugget: f64,
) -> Result<DMatrix<f64>, GpError> {
    check_design(points, params.dim())?;
    let n = points.len();
    let amp = params.amplitude();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = amp + nugget;
        for j in 0..i {
            let v = se_kernel(&points[i], &points[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Base relative nugget and escalation ceiling (both scale with the kernel
/// amplitude).
const NUGGET_BASE_REL: f64 = 1e-8;
const NUGGET_MAX_REL: f64 = 1e-4;

/// Cholesky with nugget escalation: tries the matrix as-is, then inflates
/// the diagonal by `1e-8 * amplitude`, escalating tenfold up to
/// `1e-4 * amplitude` before giving up.
pub fn cholesky_with_nugget(
    m: &DMatrix<f64>,
    amplitude: f64,
) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok((c, 0.0));
    }
    let mut nugget = NUGGET_BASE_REL * amplitude;
    let max_nugget = NUGGET_MAX_REL * amplitude;
    while nugget <= max_nugget * (1.0 + 1e-12) {
        let mut jittered = m.clone();
        for i in 0..m.nrows() {
            jittered[(i, i)] += nugget;
        }
        if let Some(c) = Cholesky::new(jittered) {
            return Ok((c, nugget));
        }
        nugget *= 10.0;
    }
    Err(GpError::FactorizationFailed { max_nugget })
}

/// An exact Gaussian conditional: mean, covariance, and a retained Cholesky
/// factor of the (nugget-augmented) covariance for joint sampling.
#[derive(Debug, Clone)]
pub struct GaussianState {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    nugget: f64,
}

impl GaussianState {
    fn from_moments(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        amplitude: f64,
    ) -> Result<Self, GpError> {
        let (factor, nugget) = cholesky_with_nugget(&covariance, amplitude)?;
        Ok(Self {
            mean,
            covariance,
            factor,
            nugget,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// One joint draw `mean + L z`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.mean.len();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + self.factor.l() * z
    }
}

/// Exact conditional of the latent values `w(X)` given `y` under
/// `w ~ GP(0, R)`, `y = w + N(0, sigma^2 I)`:
/// mean `K (K + sigma^2 I)^{-1} y`, covariance
/// `K - K (K + sigma^2 I)^{-1} K`.
pub fn latent_conditional(
    y: &[f64],
    x: &[Vec<f64>],
    params: &KernelParams,
    sigma: f64,
) -> Result<GaussianState, GpError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(GpError::BadSigma);
    }
    let vars = vec![sigma * sigma; x.len()];
    latent_conditional_hetero(y, x, params, &vars)
}

/// Heteroscedastic variant with per-point noise variances; used by the
/// probit sampler where the auxiliary means at a point with `m` trials carry
/// noise variance `1/m`.
pub fn latent_conditional_hetero(
    y: &[f64],
    x: &[Vec<f64>],
    params: &KernelParams,
    noise_vars: &[f64],
) -> Result<GaussianState, GpError> {
    check_design(x, params.dim())?;
    let n = x.len();
    if y.len() != n {
        return Err(GpError::LengthMismatch {
            what: "observations",
            expected: n,
            got: y.len(),
        });
    }
    if noise_vars.len() != n {
        return Err(GpError::LengthMismatch {
            what: "noise variances",
            expected: n,
            got: noise_vars.len(),
        });
    }
    if noise_vars.iter().any(|v| !(*v > 0.0)) {
        return Err(GpError::BadSigma);
    }
    let k = gram_matrix(x, params, 0.0)?;
    let mut c = k.clone();
    for i in 0..n {
        c[(i, i)] += noise_vars[i];
    }
    let (c_chol, _) = cholesky_with_nugget(&c, params.amplitude())?;
    let yv = DVector::from_column_slice(y);
    let mean = &k * c_chol.solve(&yv);
    // cov = K - K C^{-1} K, symmetrized to remove rounding drift
    let cinv_k = c_chol.solve(&k);
    let mut cov = &k - &k * cinv_k;
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    GaussianState::from_moments(mean, cov, params.amplitude())
}

/// Gaussian marginal log likelihood of `y` with the latent integrated out:
/// `y ~ N(0, K + diag(noise_vars))`.
pub fn log_marginal(
    y: &[f64],
    x: &[Vec<f64>],
    params: &KernelParams,
    noise_vars: &[f64],
) -> Result<f64, GpError> {
    let k = gram_matrix(x, params, 0.0)?;
    log_marginal_with_gram(y, &k, noise_vars, params.amplitude())
}

/// As [`log_marginal`] with a precomputed noiseless Gram matrix.
pub(crate) fn log_marginal_with_gram(
    y: &[f64],
    k: &DMatrix<f64>,
    noise_vars: &[f64],
    amplitude: f64,
) -> Result<f64, GpError> {
    let n = y.len();
    let mut c = k.clone();
    for i in 0..n {
        c[(i, i)] += noise_vars[i];
    }
    let (chol, _) = cholesky_with_nugget(&c, amplitude)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let quad = yv.dot(&alpha);
    let logdet: f64 = (0..n).map(|i| chol.l()[(i, i)].ln()).sum();
    Ok(-0.5 * quad - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// For each latent draw at the design points, samples the GP jointly on
/// `grid` from the exact conditional given `w(X)` (noise-free conditioning:
/// the latent values are known exactly).
pub fn predict_grid<R: Rng>(
    draws: &[Vec<f64>],
    x: &[Vec<f64>],
    grid: &[Vec<f64>],
    params: &KernelParams,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, GpError> {
    check_design(x, params.dim())?;
    check_design(grid, params.dim())?;
    let n = x.len();
    let m = grid.len();
    let k_xx = gram_matrix(x, params, 0.0)?;
    let (xx_chol, _) = cholesky_with_nugget(&k_xx, params.amplitude())?;
    let k_gx = DMatrix::from_fn(m, n, |i, j| se_kernel(&grid[i], &x[j], params));
    let k_gg = gram_matrix(grid, params, 0.0)?;
    // cov = K_gg - K_gx K_xx^{-1} K_xg, shared across draws
    let xx_inv_kxg = xx_chol.solve(&k_gx.transpose());
    let mut cov = &k_gg - &k_gx * &xx_inv_kxg;
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    let (cov_chol, _) = cholesky_with_nugget(&cov, params.amplitude())?;

    let mut out = Vec::with_capacity(draws.len());
    for d in draws {
        if d.len() != n {
            return Err(GpError::LengthMismatch {
                what: "latent draw",
                expected: n,
                got: d.len(),
            });
        }
        let w = DVector::from_column_slice(d);
        let mean = &k_gx * xx_chol.solve(&w);
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sample = mean + cov_chol.l() * z;
        out.push(sample.iter().copied().collect());
    }
    Ok(out)
}

/// Affine map of each covariate dimension onto `[0,1]`, fit from data and
/// inverted for reporting. A dimension with no spread maps to 0.5.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DomainMap {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainMap {
    pub fn fit(points: &[Vec<f64>]) -> Result<Self, GpError> {
        if points.is_empty() {
            return Err(GpError::EmptyDesign);
        }
        let dim = points[0].len();
        check_design(points, dim)?;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for (k, v) in p.iter().enumerate() {
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Per-dimension widths of the fitted box.
    pub fn spans(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| hi - lo)
            .collect()
    }

    pub fn forward_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(k, v)| {
                let span = self.hi[k] - self.lo[k];
                if span > 0.0 {
                    (v - self.lo[k]) / span
                } else {
                    0.5
                }
            })
            .collect()
    }

    pub fn forward(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.iter().map(|p| self.forward_point(p)).collect()
    }

    pub fn inverse_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(k, v)| self.lo[k] + v * (self.hi[k] - self.lo[k]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn params1(beta: f64, gamma: f64) -> KernelParams {
        KernelParams::new(beta, vec![gamma]).unwrap()
    }

    #[test]
    fn kernel_values() {
        let p = params1(2.0, 1.0);
        assert_abs_diff_eq!(se_kernel(&[0.3], &[0.3], &p), 0.5, epsilon = 1e-15);
        let p = params1(1.0, 1.0);
        assert_abs_diff_eq!(
            se_kernel(&[0.0], &[1.0], &p),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        // gamma -> 0 approaches the constant kernel beta^{-1}
        let p = params1(4.0, 1e-12);
        assert_abs_diff_eq!(se_kernel(&[0.0], &[1.0], &p), 0.25, epsilon = 1e-10);
    }

    #[test]
    fn kernel_is_stationary() {
        let p = KernelParams::new(1.5, vec![0.7, 2.2]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shift: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a2: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let b2: Vec<f64> = b.iter().zip(&shift).map(|(x, s)| x + s).collect();
            assert_abs_diff_eq!(
                se_kernel(&a, &b, &p),
                se_kernel(&a2, &b2, &p),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(KernelParams::new(0.0, vec![1.0]).is_err());
        assert!(KernelParams::new(1.0, vec![]).is_err());
        assert!(KernelParams::new(1.0, vec![-1.0]).is_err());
    }

    #[test]
    fn gram_single_point_and_elementwise() {
        let p = params1(2.0, 3.0);
        let k = gram_matrix(&[vec![0.1]], &p, 1e-6).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], 0.5 + 1e-6, epsilon = 1e-15);

        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let k = gram_matrix(&pts, &p, 0.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_abs_diff_eq!(
                    k[(i, j)],
                    se_kernel(&pts[i], &pts[j], &p),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn gram_eigenvalues_non_negative() {
        let p = params1(1.0, 10.0);
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let k = gram_matrix(&pts, &p, 0.0).unwrap();
        let eig = nalgebra::SymmetricEigen::new(k);
        for l in eig.eigenvalues.iter() {
            assert!(*l >= -1e-8, "eigenvalue {l}");
        }
    }

    #[test]
    fn duplicate_points_need_nugget() {
        let p = params1(1.0, 1.0);
        let pts = vec![vec![0.5], vec![0.5]];
        let k = gram_matrix(&pts, &p, 0.0).unwrap();
        assert!(Cholesky::new(k.clone()).is_none());
        let (_, nugget) = cholesky_with_nugget(&k, p.amplitude()).unwrap();
        assert!(nugget > 0.0);
    }

    #[test]
    fn latent_conditional_limits() {
        let p = params1(1.0, 1.0);
        let x = vec![vec![0.1], vec![0.5], vec![0.9]];
        let y = [1.0, -0.5, 2.0];

        let huge = latent_conditional(&y, &x, &p, 1e6).unwrap();
        for m in huge.mean().iter() {
            assert!(m.abs() < 1e-6, "prior not recovered: {m}");
        }

        let tiny = latent_conditional(&y, &x, &p, 1e-6).unwrap();
        for (m, t) in tiny.mean().iter().zip(y) {
            assert_abs_diff_eq!(m, &t, epsilon = 1e-4);
        }
    }

    #[test]
    fn latent_conditional_matches_naive_inverse() {
        let p = params1(1.3, 2.0);
        let x = vec![vec![0.05], vec![0.4], vec![0.95]];
        let y = [0.3, 1.1, -0.7];
        let sigma = 0.6;
        let state = latent_conditional(&y, &x, &p, sigma).unwrap();

        // independent route: explicit LU inverse of K + sigma^2 I
        let k = gram_matrix(&x, &p, 0.0).unwrap();
        let mut c = k.clone();
        for i in 0..3 {
            c[(i, i)] += sigma * sigma;
        }
        let cinv = c.try_inverse().unwrap();
        let yv = DVector::from_column_slice(&y);
        let mean = &k * &cinv * &yv;
        let cov = &k - &k * &cinv * &k;
        for i in 0..3 {
            assert_abs_diff_eq!(state.mean()[i], mean[i], epsilon = 1e-10);
            for j in 0..3 {
                assert_abs_diff_eq!(state.covariance()[(i, j)], cov[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn latent_conditional_invariant_under_reordering() {
        let p = params1(0.8, 3.0);
        let x = vec![vec![0.1], vec![0.3], vec![0.7], vec![0.95]];
        let y = [0.4, -0.2, 0.9, 1.5];
        let perm = [2usize, 0, 3, 1];
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = latent_conditional(&y, &x, &p, 0.5).unwrap();
        let b = latent_conditional(&yp, &xp, &p, 0.5).unwrap();
        for (slot, &i) in perm.iter().enumerate() {
            assert_abs_diff_eq!(b.mean()[slot], a.mean()[i], epsilon = 1e-8);
            for (slot2, &j) in perm.iter().enumerate() {
                assert_abs_diff_eq!(
                    b.covariance()[(slot, slot2)],
                    a.covariance()[(i, j)],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn log_marginal_matches_direct_density() {
        let p = params1(1.0, 1.5);
        let x = vec![vec![0.2], vec![0.6], vec![0.8]];
        let y = [0.1, -0.4, 0.9];
        let sigma2 = 0.49;
        let ll = log_marginal(&y, &x, &p, &[sigma2; 3]).unwrap();

        let k = gram_matrix(&x, &p, 0.0).unwrap();
        let mut c = k;
        for i in 0..3 {
            c[(i, i)] += sigma2;
        }
        let det = c.determinant();
        let cinv = c.try_inverse().unwrap();
        let yv = DVector::from_column_slice(&y);
        let direct = -0.5 * yv.dot(&(&cinv * &yv))
            - 0.5 * det.ln()
            - 1.5 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(ll, direct, epsilon = 1e-10);
    }

    #[test]
    fn predict_at_design_reproduces_draw() {
        let p = params1(1.0, 2.0);
        let x = vec![vec![0.0], vec![0.35], vec![0.7], vec![1.0]];
        let draw = vec![0.2, 0.5, 0.1, 0.8];
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let out = predict_grid(&[draw.clone()], &x, &x, &p, &mut rng).unwrap();
        for (got, want) in out[0].iter().zip(&draw) {
            assert!((got - want).abs() < 1e-2, "{got} vs {want}");
        }
    }

    #[test]
    fn predict_far_point_reverts_to_prior() {
        let p = params1(2.0, 50.0);
        let x = vec![vec![0.0], vec![0.05]];
        let draws: Vec<Vec<f64>> = (0..2000).map(|i| vec![i as f64 % 3.0, 0.5]).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(123);
        let out = predict_grid(&draws, &x, &[vec![1.0]], &p, &mut rng).unwrap();
        let vals: Vec<f64> = out.iter().map(|v| v[0]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        // marginal should be close to N(0, beta^{-1}) = N(0, 0.5)
        assert!(mean.abs() < 0.06, "mean {mean}");
        assert!((var - 0.5).abs() < 0.06, "var {var}");
    }

    #[test]
    fn predict_grid_covariance_matches_closed_form() {
        let p = params1(1.0, 4.0);
        let x = vec![vec![0.2], vec![0.8]];
        let grid = vec![vec![0.4], vec![0.6]];
        let n_draws = 2000;
        let draws = vec![vec![0.3, -0.2]; n_draws];
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let out = predict_grid(&draws, &x, &grid, &p, &mut rng).unwrap();

        let k_xx = gram_matrix(&x, &p, 0.0).unwrap();
        let k_gx =
            DMatrix::from_fn(2, 2, |i, j| se_kernel(&grid[i], &x[j], &p));
        let k_gg = gram_matrix(&grid, &p, 0.0).unwrap();
        let cov = &k_gg - &k_gx * k_xx.try_inverse().unwrap() * k_gx.transpose();

        let mean = |f: &dyn Fn(&Vec<f64>) -> f64| -> f64 {
            out.iter().map(|v| f(v)).sum::<f64>() / n_draws as f64
        };
        let m0 = mean(&|v| v[0]);
        let m1 = mean(&|v| v[1]);
        let c00 = mean(&|v| (v[0] - m0) * (v[0] - m0));
        let c01 = mean(&|v| (v[0] - m0) * (v[1] - m1));
        let c11 = mean(&|v| (v[1] - m1) * (v[1] - m1));
        // 4-5 MC standard errors of a variance estimate with N = 2000
        let tol = 5.0 * (2.0f64 / n_draws as f64).sqrt() * cov[(0, 0)].max(cov[(1, 1)]);
        assert!((c00 - cov[(0, 0)]).abs() < tol, "{c00} vs {}", cov[(0, 0)]);
        assert!((c01 - cov[(0, 1)]).abs() < tol, "{c01} vs {}", cov[(0, 1)]);
        assert!((c11 - cov[(1, 1)]).abs() < tol, "{c11} vs {}", cov[(1, 1)]);
    }

    #[test]
    fn domain_map_roundtrip() {
        let pts = vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![3.0, 5.0]];
        let map = DomainMap::fit(&pts).unwrap();
        let f = map.forward(&pts);
        assert_eq!(f[0], vec![0.0, 0.5]); // constant dim maps to 0.5
        assert_eq!(f[1], vec![1.0, 0.5]);
        let back = map.inverse_point(&map.forward_point(&[2.5, 5.0]));
        assert_abs_diff_eq!(back[0], 2.5, epsilon = 1e-12);
    }
}
