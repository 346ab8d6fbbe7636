//! Bayesian monotone curve and surface estimation by projecting
//! Gaussian-process posterior draws onto the monotone cone.
//!
//! The pipeline: sample the unconstrained GP posterior by MCMC
//! ([`mcmc`]), project every retained draw onto the monotone cone — exact
//! weighted pooled-adjacent-violators in 1-D ([`pava`]), alternating
//! residual-corrected projections under the coordinate-wise partial order in
//! 2-D/3-D ([`proj2d`]) — and summarize the projected draws into point
//! estimates and pointwise credible bands ([`inference`]). [`simgen`]
//! generates the benchmark truths and datasets, [`io`] defines the CSV and
//! config formats, and [`pipeline`]/[`benchmark`] tie everything together for
//! the `monoproj` command-line tool.

pub mod benchmark;
pub mod gp;
pub mod grid;
pub mod inference;
pub mod io;
pub mod mcmc;
pub mod pava;
pub mod pipeline;
pub mod proj2d;
pub mod simgen;

pub use grid::{GridError, GridFunction, LatticeGrid, MonotoneGridFunction, SurfaceGrid};
