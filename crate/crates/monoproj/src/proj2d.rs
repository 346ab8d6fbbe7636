//! Projection of gridded surfaces (and small p-dimensional lattices) onto the
//! cone of functions monotone under the coordinate-wise partial ordering.
//!
//! The algorithm alternates line-wise isotonic projections along each axis,
//! carrying one residual tensor per axis: projecting along axis `a` uses the
//! input `w + sum of the other axes' residuals`, and the residual for axis
//! `a` is updated to `projection - input`. For two axes this is exactly the
//! classical successive-approximation scheme for matrix partial orders
//! (a Dykstra-style iteration on the cones of row-monotone and
//! column-monotone surfaces), and it converges to the least-squares
//! projection onto their intersection.
//!
//! [`upper_set_oracle`] provides independent ground truth on tiny grids by
//! enumerating all upper/lower sets of the grid poset.

use thiserror::Error;

use crate::grid::{GridError, LatticeGrid, SurfaceGrid};
use crate::pava::isotonic_in_place;

#[derive(Debug, Error)]
pub enum Proj2dError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("tol_mono must be positive, got {0}")]
    BadTolerance(f64),
    #[error("max_iter must be at least 1")]
    BadMaxIter,
    #[error("non-finite intermediate value during projection")]
    NonFiniteIntermediate,
    #[error("grid too large for exhaustive oracle: {cells} cells (limit {limit})")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("weights: expected length {expected}, got {got}")]
    WeightLength { expected: usize, got: usize },
    #[error("weights must be strictly positive and finite")]
    BadWeights,
}

/// Outcome of a surface projection.
#[derive(Debug, Clone)]
pub struct Proj2dReport {
    pub result: SurfaceGrid,
    /// Full alternation cycles started (the cycle during which termination
    /// occurred counts).
    pub iterations: usize,
    /// Largest monotonicity violation of the returned surface.
    pub max_violation: f64,
    pub converged: bool,
    /// First cycle at which an iterate was monotone in every direction
    /// within tolerance (termination additionally waits for successive
    /// iterates to agree). Under uniform weights this is 1 for every 2-D
    /// input: isotonic regression is a monotone operator, so the t-sweep of
    /// an s-monotone field keeps the rows pointwise ordered.
    pub first_feasible_iteration: Option<usize>,
    /// Norm of each line-projection iterate in the order produced
    /// (`w-hat^(1), w-tilde^(1), w-hat^(2), ...`), in the inner product the
    /// projection minimizes; the sequence is non-increasing.
    pub norm_chain: Vec<f64>,
}

/// As [`Proj2dReport`] but for a p-dimensional lattice.
#[derive(Debug, Clone)]
pub struct ProjLatticeReport {
    pub result: LatticeGrid,
    pub iterations: usize,
    pub max_violation: f64,
    pub converged: bool,
    pub first_feasible_iteration: Option<usize>,
    pub norm_chain: Vec<f64>,
}

/// Monotonicity check along every axis of a flat row-major tensor: returns
/// the largest `(predecessor - successor)+` over adjacent pairs.
fn lattice_max_violation(values: &[f64], shape: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    let mut stride = 1usize;
    for a in (0..shape.len()).rev() {
        let m = shape[a];
        let block = m * stride;
        let outer = values.len() / block;
        for ob in 0..outer {
            let base = ob * block;
            for inner in 0..stride {
                for k in 1..m {
                    let prev = values[base + inner + (k - 1) * stride];
                    let next = values[base + inner + k * stride];
                    worst = worst.max(prev - next);
                }
            }
        }
        stride *= m;
    }
    worst
}

/// Applies the weighted 1-D isotonic fit to every line along `axis`.
fn isotonic_sweep_axis(
    values: &mut [f64],
    weights: &[f64],
    shape: &[usize],
    axis: usize,
    line: &mut Vec<f64>,
    wline: &mut Vec<f64>,
) {
    let stride: usize = shape.iter().skip(axis + 1).product();
    let m = shape[axis];
    let block = m * stride;
    let outer = values.len() / block;
    for ob in 0..outer {
        let base = ob * block;
        for inner in 0..stride {
            line.clear();
            wline.clear();
            for k in 0..m {
                let idx = base + inner + k * stride;
                line.push(values[idx]);
                wline.push(weights[idx]);
            }
            isotonic_in_place(line, wline);
            for k in 0..m {
                values[base + inner + k * stride] = line[k];
            }
        }
    }
}

struct LatticeProjection {
    values: Vec<f64>,
    iterations: usize,
    max_violation: f64,
    converged: bool,
    first_feasible: Option<usize>,
    norm_chain: Vec<f64>,
}

/// Core alternating projection over a row-major tensor with the given shape.
/// `weights` are per-point masses for the least-squares objective (all ones
/// for the plain projection).
///
/// Termination: a fully monotone iterate is returned once successive
/// line-projection iterates agree within `tol_mono` in sup norm. Feasibility
/// alone is not enough — an iterate can be monotone in every direction while
/// still short of the least-squares projection (on `[[1,0],[0,1]]` the first
/// feasible iterate is `[[1/4,1/4],[1/2,1]]`, but the projection is
/// `[[1/3,1/3],[1/3,1]]`). The sole exception is the very first line
/// projection: if `P_axis0(w)` is already monotone in every direction it is
/// exactly the projection, by the variational characterization on the larger
/// cone.
fn project_tensor(
    w: &[f64],
    weights: &[f64],
    shape: &[usize],
    tol_mono: f64,
    max_iter: usize,
) -> Result<LatticeProjection, Proj2dError> {
    if !(tol_mono > 0.0) {
        return Err(Proj2dError::BadTolerance(tol_mono));
    }
    if max_iter == 0 {
        return Err(Proj2dError::BadMaxIter);
    }
    let p = shape.len();
    let n = w.len();
    let wsum: f64 = weights.iter().sum();
    let norm_of = |v: &[f64]| -> f64 {
        v.iter()
            .zip(weights)
            .map(|(x, m)| m / wsum * x * x)
            .sum::<f64>()
            .sqrt()
    };

    let mut residuals = vec![vec![0.0f64; n]; p];
    let mut iterate = vec![0.0f64; n];
    let mut prev_iterate: Option<Vec<f64>> = None;
    let mut input = vec![0.0f64; n];
    let mut line = Vec::with_capacity(*shape.iter().max().unwrap());
    let mut wline = Vec::with_capacity(line.capacity());
    let mut norm_chain = Vec::new();
    let mut first_feasible = None;

    for cycle in 1..=max_iter {
        for a in 0..p {
            for idx in 0..n {
                let mut x = w[idx];
                for (b, res) in residuals.iter().enumerate() {
                    if b != a {
                        x += res[idx];
                    }
                }
                input[idx] = x;
            }
            iterate.copy_from_slice(&input);
            isotonic_sweep_axis(&mut iterate, weights, shape, a, &mut line, &mut wline);
            if iterate.iter().any(|v| !v.is_finite()) {
                return Err(Proj2dError::NonFiniteIntermediate);
            }
            for idx in 0..n {
                residuals[a][idx] = iterate[idx] - input[idx];
            }
            norm_chain.push(norm_of(&iterate));
            let violation = lattice_max_violation(&iterate, shape);
            if violation <= tol_mono {
                if first_feasible.is_none() {
                    first_feasible = Some(cycle);
                }
                let stable = match &prev_iterate {
                    None => true,
                    Some(prev) => {
                        let step = iterate
                            .iter()
                            .zip(prev)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        step <= tol_mono
                    }
                };
                if stable {
                    return Ok(LatticeProjection {
                        values: iterate,
                        iterations: cycle,
                        max_violation: violation,
                        converged: true,
                        first_feasible,
                        norm_chain,
                    });
                }
            }
            match &mut prev_iterate {
                Some(prev) => prev.copy_from_slice(&iterate),
                None => prev_iterate = Some(iterate.clone()),
            }
        }
    }
    let violation = lattice_max_violation(&iterate, shape);
    Ok(LatticeProjection {
        values: iterate,
        iterations: max_iter,
        max_violation: violation,
        converged: false,
        first_feasible,
        norm_chain,
    })
}

/// Projects a surface onto the bimonotone cone by alternating row- and
/// column-wise isotonic fits with residual correction. Terminates at the
/// first iterate monotone in both directions within `tol_mono`, or after
/// `max_iter` cycles with `converged = false`.
pub fn project_surface(
    w: &SurfaceGrid,
    tol_mono: f64,
    max_iter: usize,
) -> Result<Proj2dReport, Proj2dError> {
    let weights = vec![1.0; w.values().len()];
    project_surface_with_weights(w, &weights, tol_mono, max_iter)
}

/// Weighted variant: `weights` are per-point masses in the same row-major
/// layout as `w.values()`, for random-design surfaces.
pub fn project_surface_with_weights(
    w: &SurfaceGrid,
    weights: &[f64],
    tol_mono: f64,
    max_iter: usize,
) -> Result<Proj2dReport, Proj2dError> {
    if weights.len() != w.values().len() {
        return Err(Proj2dError::WeightLength {
            expected: w.values().len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|m| !m.is_finite() || *m <= 0.0) {
        return Err(Proj2dError::BadWeights);
    }
    let shape = [w.m1(), w.m2()];
    let proj = project_tensor(w.values(), weights, &shape, tol_mono, max_iter)?;
    Ok(Proj2dReport {
        result: w.with_values(proj.values)?,
        iterations: proj.iterations,
        max_violation: proj.max_violation,
        converged: proj.converged,
        first_feasible_iteration: proj.first_feasible,
        norm_chain: proj.norm_chain,
    })
}

/// Cyclic-sweep projection of a p-dimensional lattice (p <= 3), one residual
/// tensor per axis.
pub fn project_lattice(
    w: &LatticeGrid,
    tol_mono: f64,
    max_iter: usize,
) -> Result<ProjLatticeReport, Proj2dError> {
    let weights = vec![1.0; w.values().len()];
    let shape = w.shape();
    let proj = project_tensor(w.values(), &weights, &shape, tol_mono, max_iter)?;
    Ok(ProjLatticeReport {
        result: w.with_values(proj.values)?,
        iterations: proj.iterations,
        max_violation: proj.max_violation,
        converged: proj.converged,
        first_feasible_iteration: proj.first_feasible,
        norm_chain: proj.norm_chain,
    })
}

/// Checks coordinate-wise monotonicity. Returns the flag and the largest
/// violation `(predecessor - successor)+` over adjacent pairs on both axes.
pub fn is_bimonotone(w: &SurfaceGrid, tol: f64) -> (bool, f64) {
    let violation = lattice_max_violation(w.values(), &[w.m1(), w.m2()]);
    (violation <= tol, violation)
}

const ORACLE_CELL_LIMIT: usize = 12;

/// Isotonic regression over the grid poset by exhaustive enumeration:
///
/// ```text
/// P[c] = min over lower sets L containing c
///        of max over upper sets U containing c
///        of mean(w over L intersect U)
/// ```
///
/// This is the poset analogue of the 1-D rule
/// `P[i] = min over j >= i of max over k <= i of wavg(values[k..=j])`:
/// the interval `k..=j` is the intersection of the lower set `0..=j`
/// (indexed by the outer min) with the upper set `k..` (inner max).
///
/// Exponential in the cell count; restricted to `m1 * m2 <= 12`. Used as
/// independent ground truth for the alternating projection.
pub fn upper_set_oracle(w: &SurfaceGrid) -> Result<SurfaceGrid, Proj2dError> {
    let m1 = w.m1();
    let m2 = w.m2();
    let cells = m1 * m2;
    if cells > ORACLE_CELL_LIMIT {
        return Err(Proj2dError::GridTooLarge {
            cells,
            limit: ORACLE_CELL_LIMIT,
        });
    }
    let idx = |i: usize, j: usize| i * m2 + j;

    // masks of immediate successors in the product order
    let mut succ = vec![0u32; cells];
    for i in 0..m1 {
        for j in 0..m2 {
            let mut m = 0u32;
            if i + 1 < m1 {
                m |= 1 << idx(i + 1, j);
            }
            if j + 1 < m2 {
                m |= 1 << idx(i, j + 1);
            }
            succ[idx(i, j)] = m;
        }
    }

    let full = 1u32 << cells;
    let mut upper_sets = Vec::new();
    let mut lower_sets = Vec::new();
    'mask: for mask in 0..full {
        for c in 0..cells {
            if mask & (1 << c) != 0 && (mask & succ[c]) != succ[c] {
                continue 'mask;
            }
        }
        upper_sets.push(mask);
        // complements of upper sets are exactly the lower sets
        lower_sets.push(!mask & (full - 1));
    }

    // subset sums over all masks via bit DP
    let mut sums = vec![0.0f64; full as usize];
    for mask in 1..full {
        let low = mask & mask.wrapping_neg();
        let c = low.trailing_zeros() as usize;
        sums[mask as usize] = sums[(mask ^ low) as usize] + w.values()[c];
    }

    let mut out = vec![0.0f64; cells];
    for (c, slot) in out.iter_mut().enumerate() {
        let bit = 1u32 << c;
        let mut outer_min = f64::INFINITY;
        for &l in lower_sets.iter().filter(|&&l| l & bit != 0) {
            let mut inner_max = f64::NEG_INFINITY;
            for &u in upper_sets.iter().filter(|&&u| u & bit != 0) {
                let inter = u & l;
                let count = inter.count_ones() as f64;
                inner_max = inner_max.max(sums[inter as usize] / count);
            }
            outer_min = outer_min.min(inner_max);
        }
        *slot = outer_min;
    }
    Ok(w.with_values(out)?)
}
