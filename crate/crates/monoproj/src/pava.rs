//! Exact weighted isotonic projection of a gridded function onto the cone of
//! non-decreasing functions.
//!
//! [`pava_project`] is the production path: left-to-right pooled adjacent
//! violators with weighted block means, O(n), pooling only on strict
//! violations. [`minmax_oracle`] evaluates the min-max characterization
//!
//! ```text
//! P[i] = min over j >= i  of  max over k <= i  of  wavg(values[k..=j])
//! ```
//!
//! directly in O(n^3) and serves as independent ground truth in tests.

use crate::grid::{GridError, GridFunction, MonotoneGridFunction};

/// In-place weighted isotonic fit of `values`; the engine behind
/// [`pava_project`] and the line sweeps of the surface projection.
///
/// Blocks are merged while an adjacent pair strictly violates the order; the
/// fitted value of a block is its weighted mean. No epsilon is applied:
/// violations are judged by strict `>`.
pub(crate) fn isotonic_in_place(values: &mut [f64], weights: &[f64]) {
    debug_assert_eq!(values.len(), weights.len());
    let n = values.len();
    if n <= 1 {
        return;
    }
    // (block length, weight sum, weighted value sum)
    let mut blocks: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        blocks.push((1, weights[i], weights[i] * values[i]));
        while blocks.len() >= 2 {
            let m = blocks.len();
            let last = blocks[m - 1];
            let prev = blocks[m - 2];
            if prev.2 / prev.1 > last.2 / last.1 {
                blocks[m - 2] = (prev.0 + last.0, prev.1 + last.1, prev.2 + last.2);
                blocks.pop();
            } else {
                break;
            }
        }
    }
    let mut idx = 0;
    for (len, wsum, wysum) in blocks {
        let mean = wysum / wsum;
        for v in values.iter_mut().skip(idx).take(len) {
            *v = mean;
        }
        idx += len;
    }
}

/// Projects `f` onto the monotone cone in the weighted least-squares sense:
/// the unique minimizer of `sum_i weights[i] * (values[i] - F[i])^2` over
/// non-decreasing `F`. Points and weights are carried through unchanged.
pub fn pava_project(f: &GridFunction) -> MonotoneGridFunction {
    let mut values = f.values().to_vec();
    isotonic_in_place(&mut values, f.weights());
    MonotoneGridFunction::new_unchecked(
        f.with_values(values)
            .expect("projected values inherit a valid grid"),
    )
}

/// Direct discrete evaluation of the min-max solution. O(n^3); intended for
/// grids of at most a few dozen points, as an independent check on
/// [`pava_project`].
pub fn minmax_oracle(f: &GridFunction) -> MonotoneGridFunction {
    let n = f.len();
    let v = f.values();
    let w = f.weights();
    // prefix sums so wavg(k..=j) is O(1)
    let mut pw = vec![0.0; n + 1];
    let mut pwy = vec![0.0; n + 1];
    for i in 0..n {
        pw[i + 1] = pw[i] + w[i];
        pwy[i + 1] = pwy[i] + w[i] * v[i];
    }
    let wavg = |k: usize, j: usize| (pwy[j + 1] - pwy[k]) / (pw[j + 1] - pw[k]);

    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut min_over_j = f64::INFINITY;
        for j in i..n {
            let mut max_over_k = f64::NEG_INFINITY;
            for k in 0..=i {
                max_over_k = max_over_k.max(wavg(k, j));
            }
            min_over_j = min_over_j.min(max_over_k);
        }
        out[i] = min_over_j;
    }
    MonotoneGridFunction::new_unchecked(
        f.with_values(out)
            .expect("oracle values inherit a valid grid"),
    )
}

/// Supremum distance between two functions on the same grid.
pub fn sup_distance(f: &GridFunction, g: &GridFunction) -> Result<f64, GridError> {
    if !f.same_points(g) {
        return Err(GridError::Mismatch("points"));
    }
    Ok(f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// L2 distance under the shared weights interpreted as masses of a base
/// measure, normalized to total mass one:
/// `( sum_i wtilde_i (f_i - g_i)^2 )^{1/2}`.
pub fn weighted_l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64, GridError> {
    if !f.same_points(g) {
        return Err(GridError::Mismatch("points"));
    }
    if !f.same_weights(g) {
        return Err(GridError::Mismatch("weights"));
    }
    let wsum: f64 = f.weights().iter().sum();
    let s: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .zip(f.weights())
        .map(|((a, b), w)| w / wsum * (a - b) * (a - b))
        .sum();
    Ok(s.sqrt())
}
