//! Deterministic generators for the benchmark truths and simulated datasets.
//!
//! Curve truths live on `(0, 10]`; surface truths on `[0,1]^2`. Every truth
//! is monotone non-decreasing with respect to its argument ordering, and
//! datasets are reproducible from `(truth, size, sigma, design, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown truth id: {0}")]
    UnknownId(String),
    #[error("argument {value} outside the domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },
    #[error("invalid simulation arguments: {0}")]
    BadArgs(String),
}

/// The six benchmark curve truths on `(0, 10]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveTruth {
    Flat,
    Sinusoidal,
    Step,
    Linear,
    Exponential,
    Logistic,
}

impl CurveTruth {
    pub const ALL: [CurveTruth; 6] = [
        CurveTruth::Flat,
        CurveTruth::Sinusoidal,
        CurveTruth::Step,
        CurveTruth::Linear,
        CurveTruth::Exponential,
        CurveTruth::Logistic,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            CurveTruth::Flat => "flat",
            CurveTruth::Sinusoidal => "sinusoidal",
            CurveTruth::Step => "step",
            CurveTruth::Linear => "linear",
            CurveTruth::Exponential => "exponential",
            CurveTruth::Logistic => "logistic",
        }
    }

    pub fn from_id(id: &str) -> Result<Self, SimError> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.id() == id)
            .ok_or_else(|| SimError::UnknownId(id.to_string()))
    }

    /// Truth value at `x in (0, 10]`. The step sits at 8 with the half-open
    /// convention `F(8) = 3`.
    pub fn value(&self, x: f64) -> Result<f64, SimError> {
        if !(x > 0.0 && x <= 10.0) {
            return Err(SimError::OutOfDomain {
                value: x,
                domain: "(0, 10]",
            });
        }
        Ok(match self {
            CurveTruth::Flat => 3.0,
            CurveTruth::Sinusoidal => 0.32 * (x + x.sin()),
            CurveTruth::Step => {
                if x <= 8.0 {
                    3.0
                } else {
                    6.0
                }
            }
            CurveTruth::Linear => 0.3 * x,
            CurveTruth::Exponential => 0.15 * (0.6 * x - 3.0).exp(),
            CurveTruth::Logistic => 3.0 / (1.0 + (-2.0 * x + 10.0).exp()),
        })
    }
}

/// Convenience wrapper taking the string id.
pub fn curve_truth(id: &str, x: f64) -> Result<f64, SimError> {
    CurveTruth::from_id(id)?.value(x)
}

/// Default library of bimonotone surface truths on `[0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceTruth {
    Flat,
    AdditiveLinear,
    Product,
    SmoothedStep,
    LogisticRidge,
    Exponential,
    Mixture,
}

impl SurfaceTruth {
    pub const ALL: [SurfaceTruth; 7] = [
        SurfaceTruth::Flat,
        SurfaceTruth::AdditiveLinear,
        SurfaceTruth::Product,
        SurfaceTruth::SmoothedStep,
        SurfaceTruth::LogisticRidge,
        SurfaceTruth::Exponential,
        SurfaceTruth::Mixture,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SurfaceTruth::Flat => "flat",
            SurfaceTruth::AdditiveLinear => "additive_linear",
            SurfaceTruth::Product => "product",
            SurfaceTruth::SmoothedStep => "smoothed_step",
            SurfaceTruth::LogisticRidge => "logistic_ridge",
            SurfaceTruth::Exponential => "exponential",
            SurfaceTruth::Mixture => "mixture",
        }
    }

    pub fn from_id(id: &str) -> Result<Self, SimError> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.id() == id)
            .ok_or_else(|| SimError::UnknownId(id.to_string()))
    }

    /// Truth value at `(s, t) in [0,1]^2`. All surfaces are built from sums
    /// and products of non-decreasing pieces, so each is monotone under the
    /// coordinate-wise partial order.
    pub fn value(&self, s: f64, t: f64) -> Result<f64, SimError> {
        for v in [s, t] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::OutOfDomain {
                    value: v,
                    domain: "[0, 1]",
                });
            }
        }
        Ok(match self {
            SurfaceTruth::Flat => 1.0,
            SurfaceTruth::AdditiveLinear => s + t,
            SurfaceTruth::Product => 2.0 * s * t,
            SurfaceTruth::SmoothedStep => 2.0 / (1.0 + (-8.0 * (s + t - 1.0)).exp()),
            SurfaceTruth::LogisticRidge => 3.0 / (1.0 + (-4.0 * s - 2.0 * t + 3.0).exp()),
            SurfaceTruth::Exponential => 0.5 * ((s + t).exp() - 1.0),
            SurfaceTruth::Mixture => 1.5 * (s + t) - 1.5 + 0.5 * s * t,
        })
    }
}

pub fn surface_truth(id: &str, s: f64, t: f64) -> Result<f64, SimError> {
    SurfaceTruth::from_id(id)?.value(s, t)
}

/// Covariate layout for curve datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// `x_i = 10 i / n`, `i = 1..n` (endpoint-inclusive, excluding 0).
    Equidistant,
    /// `n` sorted draws from `U(0, 10]`.
    UniformRandom,
}

impl Design {
    pub fn from_id(id: &str) -> Result<Self, SimError> {
        match id {
            "equidistant" => Ok(Design::Equidistant),
            "uniform" | "uniform-random" => Ok(Design::UniformRandom),
            other => Err(SimError::UnknownId(other.to_string())),
        }
    }
}

/// A simulated dataset: covariates (one row per observation), responses, and
/// the generator's provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub xs: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub truth: String,
    pub sigma: f64,
    pub seed: u64,
    /// True for Bernoulli responses drawn with success probability
    /// `Phi(F0(x))`.
    pub binary: bool,
}

fn curve_design<R: Rng>(n: usize, design: Design, rng: &mut R) -> Vec<f64> {
    match design {
        Design::Equidistant => (1..=n).map(|i| 10.0 * i as f64 / n as f64).collect(),
        Design::UniformRandom => {
            let mut xs: Vec<f64> = (0..n)
                .map(|_| {
                    // U(0, 10]: flip the half-open side of random::<f64>()
                    10.0 * (1.0 - rng.random::<f64>())
                })
                .collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs
        }
    }
}

/// Gaussian-noise curve dataset: `y = F0(x) + N(0, sigma^2)`.
pub fn simulate_curve(
    truth: CurveTruth,
    n: usize,
    sigma: f64,
    design: Design,
    seed: u64,
) -> Result<SimDataset, SimError> {
    if n < 2 {
        return Err(SimError::BadArgs(format!("n must be at least 2, got {n}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(SimError::BadArgs(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let xs = curve_design(n, design, &mut rng);
    let mut y = Vec::with_capacity(n);
    for x in &xs {
        let z: f64 = rng.sample(StandardNormal);
        y.push(truth.value(*x)? + sigma * z);
    }
    Ok(SimDataset {
        xs: xs.into_iter().map(|x| vec![x]).collect(),
        y,
        truth: truth.id().to_string(),
        sigma,
        seed,
        binary: false,
    })
}

/// Binary curve dataset: `y ~ Bernoulli(Phi(F0(x)))`.
pub fn simulate_curve_binary(
    truth: CurveTruth,
    n: usize,
    design: Design,
    seed: u64,
) -> Result<SimDataset, SimError> {
    if n < 2 {
        return Err(SimError::BadArgs(format!("n must be at least 2, got {n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let xs = curve_design(n, design, &mut rng);
    let phi = Normal::standard();
    let mut y = Vec::with_capacity(n);
    for x in &xs {
        let p = phi.cdf(truth.value(*x)?);
        y.push((rng.random::<f64>() < p) as u8 as f64);
    }
    Ok(SimDataset {
        xs: xs.into_iter().map(|x| vec![x]).collect(),
        y,
        truth: truth.id().to_string(),
        sigma: 0.0,
        seed,
        binary: true,
    })
}

fn surface_lattice(m1: usize, m2: usize) -> Vec<Vec<f64>> {
    let s: Vec<f64> = (0..m1).map(|i| i as f64 / (m1 - 1) as f64).collect();
    let t: Vec<f64> = (0..m2).map(|j| j as f64 / (m2 - 1) as f64).collect();
    let mut xs = Vec::with_capacity(m1 * m2);
    for si in &s {
        for tj in &t {
            xs.push(vec![*si, *tj]);
        }
    }
    xs
}

/// Gaussian-noise surface dataset on an endpoint-inclusive `m1 x m2` lattice
/// over `[0,1]^2`, row-major with the s-axis slowest.
pub fn simulate_surface(
    truth: SurfaceTruth,
    m1: usize,
    m2: usize,
    sigma: f64,
    seed: u64,
) -> Result<SimDataset, SimError> {
    if m1 < 2 || m2 < 2 {
        return Err(SimError::BadArgs(format!(
            "lattice must be at least 2x2, got {m1}x{m2}"
        )));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(SimError::BadArgs(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let xs = surface_lattice(m1, m2);
    let mut y = Vec::with_capacity(xs.len());
    for p in &xs {
        let z: f64 = rng.sample(StandardNormal);
        y.push(truth.value(p[0], p[1])? + sigma * z);
    }
    Ok(SimDataset {
        xs,
        y,
        truth: truth.id().to_string(),
        sigma,
        seed,
        binary: false,
    })
}

/// Binary surface dataset: `y ~ Bernoulli(Phi(F0(s,t)))` on the lattice.
pub fn simulate_surface_binary(
    truth: SurfaceTruth,
    m1: usize,
    m2: usize,
    seed: u64,
) -> Result<SimDataset, SimError> {
    if m1 < 2 || m2 < 2 {
        return Err(SimError::BadArgs(format!(
            "lattice must be at least 2x2, got {m1}x{m2}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let xs = surface_lattice(m1, m2);
    let phi = Normal::standard();
    let mut y = Vec::with_capacity(xs.len());
    for p in &xs {
        let prob = phi.cdf(truth.value(p[0], p[1])?);
        y.push((rng.random::<f64>() < prob) as u8 as f64);
    }
    Ok(SimDataset {
        xs,
        y,
        truth: truth.id().to_string(),
        sigma: 0.0,
        seed,
        binary: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proj2d::is_bimonotone;
    use crate::SurfaceGrid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pinned_curve_values() {
        assert_eq!(curve_truth("flat", 5.0).unwrap(), 3.0);
        assert_abs_diff_eq!(curve_truth("linear", 10.0).unwrap(), 3.0, epsilon = 1e-15);
        assert_eq!(curve_truth("step", 8.0).unwrap(), 3.0);
        assert_eq!(curve_truth("step", 8.01).unwrap(), 6.0);
        let x = std::f64::consts::FRAC_PI_2;
        assert_abs_diff_eq!(
            curve_truth("sinusoidal", x).unwrap(),
            0.32 * (x + 1.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            curve_truth("exponential", 10.0).unwrap(),
            0.15 * 3.0f64.exp(),
            epsilon = 1e-12
        );
        assert!(curve_truth("logistic", 10.0).unwrap() > 2.99);
    }

    #[test]
    fn domain_and_id_errors() {
        assert!(matches!(
            curve_truth("flat", 0.0),
            Err(SimError::OutOfDomain { .. })
        ));
        assert!(curve_truth("flat", 10.0001).is_err());
        assert!(matches!(
            curve_truth("parabola", 1.0),
            Err(SimError::UnknownId(_))
        ));
        assert!(surface_truth("additive_linear", -0.1, 0.5).is_err());
        assert!(surface_truth("bowl", 0.5, 0.5).is_err());
    }

    #[test]
    fn all_curve_truths_non_decreasing() {
        for truth in CurveTruth::ALL {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..=10_000 {
                let x = 10.0 * i as f64 / 10_000.0;
                let v = truth.value(x).unwrap();
                assert!(v >= prev, "{} decreases at {x}", truth.id());
                prev = v;
            }
        }
    }

    #[test]
    fn surface_defaults_are_bimonotone_on_64_grid() {
        for truth in SurfaceTruth::ALL {
            let axis: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
            let mut values = Vec::with_capacity(64 * 64);
            for s in &axis {
                for t in &axis {
                    values.push(truth.value(*s, *t).unwrap());
                }
            }
            let grid = SurfaceGrid::new(axis.clone(), axis.clone(), values).unwrap();
            let (ok, viol) = is_bimonotone(&grid, 0.0);
            assert!(ok, "{} violates bimonotonicity by {viol}", truth.id());
        }
    }

    #[test]
    fn additive_linear_closed_form() {
        assert_abs_diff_eq!(
            surface_truth("additive_linear", 0.3, 0.4).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        assert_eq!(surface_truth("flat", 0.1, 0.9).unwrap(), 1.0);
    }

    #[test]
    fn equidistant_design_convention() {
        let d = simulate_curve(CurveTruth::Flat, 100, 0.0, Design::Equidistant, 1).unwrap();
        assert_abs_diff_eq!(d.xs[0][0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.xs[99][0], 10.0, epsilon = 1e-15);
        // sigma = 0 gives the truth exactly
        assert!(d.y.iter().all(|v| *v == 3.0));
    }

    #[test]
    fn deterministic_and_noise_scale() {
        let a = simulate_curve(CurveTruth::Linear, 50, 1.0, Design::UniformRandom, 9).unwrap();
        let b = simulate_curve(CurveTruth::Linear, 50, 1.0, Design::UniformRandom, 9).unwrap();
        assert_eq!(a, b);

        let d = simulate_curve(CurveTruth::Linear, 10_000, 1.0, Design::Equidistant, 4).unwrap();
        let resid: Vec<f64> = d
            .xs
            .iter()
            .zip(&d.y)
            .map(|(x, y)| y - 0.3 * x[0])
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let sd = (resid.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
            / (resid.len() - 1) as f64)
            .sqrt();
        assert!((0.97..=1.03).contains(&sd), "sample sd {sd}");
    }

    #[test]
    fn binary_mode_matches_probit_probabilities() {
        let d = simulate_curve_binary(CurveTruth::Linear, 20_000, Design::Equidistant, 10).unwrap();
        assert!(d.binary);
        assert!(d.y.iter().all(|v| *v == 0.0 || *v == 1.0));
        let phi = Normal::standard();
        let expect: f64 = d
            .xs
            .iter()
            .map(|x| phi.cdf(0.3 * x[0]))
            .sum::<f64>()
            / d.xs.len() as f64;
        let got = d.y.iter().sum::<f64>() / d.y.len() as f64;
        assert!((got - expect).abs() < 0.01, "{got} vs {expect}");
    }

    #[test]
    fn surface_dataset_layout() {
        let d = simulate_surface(SurfaceTruth::AdditiveLinear, 4, 3, 0.0, 2).unwrap();
        assert_eq!(d.xs.len(), 12);
        // row-major: s slowest
        assert_eq!(d.xs[0], vec![0.0, 0.0]);
        assert_eq!(d.xs[1], vec![0.0, 0.5]);
        assert_eq!(d.xs[3], vec![0.0 + 1.0 / 3.0, 0.0]);
        assert_abs_diff_eq!(d.y[11], 2.0, epsilon = 1e-15);
        assert!(simulate_surface(SurfaceTruth::Flat, 1, 3, 0.1, 2).is_err());
    }
}
