//! Gridded function carriers: curves on a 1-D grid, surfaces on a rectangular
//! grid, and small p-dimensional lattices.
//!
//! All constructors validate their invariants up front so the numerical code
//! can assume well-formed inputs.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must contain at least one point")]
    Empty,
    #[error("points must be strictly increasing (violated at index {0})")]
    NonIncreasingPoints(usize),
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("weights must be strictly positive (violated at index {0})")]
    NonPositiveWeight(usize),
    #[error("grids do not share the same {0}")]
    Mismatch(&'static str),
    #[error("values are not non-decreasing at index {0}")]
    NotMonotone(usize),
    #[error("lattice supports 1 to 3 axes, got {0}")]
    UnsupportedDimension(usize),
}

fn check_strictly_increasing(points: &[f64]) -> Result<(), GridError> {
    if points.is_empty() {
        return Err(GridError::Empty);
    }
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(GridError::NonFinite {
                what: "point",
                index: i,
            });
        }
    }
    for i in 1..points.len() {
        if points[i] <= points[i - 1] {
            return Err(GridError::NonIncreasingPoints(i));
        }
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &'static str) -> Result<(), GridError> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(GridError::NonFinite { what, index: i });
        }
    }
    Ok(())
}

/// A real-valued function sampled on a strictly increasing 1-D grid, with one
/// strictly positive mass per point (all ones unless supplied).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    points: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl GridFunction {
    /// Unit-weight grid function.
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self, GridError> {
        let n = points.len();
        Self::with_weights(points, values, vec![1.0; n])
    }

    pub fn with_weights(
        points: Vec<f64>,
        values: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, GridError> {
        check_strictly_increasing(&points)?;
        if values.len() != points.len() {
            return Err(GridError::LengthMismatch {
                what: "values",
                expected: points.len(),
                got: values.len(),
            });
        }
        if weights.len() != points.len() {
            return Err(GridError::LengthMismatch {
                what: "weights",
                expected: points.len(),
                got: weights.len(),
            });
        }
        check_finite(&values, "value")?;
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(GridError::NonFinite {
                    what: "weight",
                    index: i,
                });
            }
            if *w <= 0.0 {
                return Err(GridError::NonPositiveWeight(i));
            }
        }
        Ok(Self {
            points,
            values,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same grid and weights, different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::with_weights(self.points.clone(), values, self.weights.clone())
    }

    /// Weighted mean of the values.
    pub fn weighted_mean(&self) -> f64 {
        let wsum: f64 = self.weights.iter().sum();
        let wysum: f64 = self
            .values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum();
        wysum / wsum
    }

    pub(crate) fn same_points(&self, other: &Self) -> bool {
        self.points == other.points
    }

    pub(crate) fn same_weights(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

/// A [`GridFunction`] whose values are non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGridFunction(GridFunction);

impl MonotoneGridFunction {
    /// Validates exact non-decrease (no tolerance).
    pub fn new(grid: GridFunction) -> Result<Self, GridError> {
        for i in 1..grid.values.len() {
            if grid.values[i] < grid.values[i - 1] {
                return Err(GridError::NotMonotone(i));
            }
        }
        Ok(Self(grid))
    }

    /// For outputs whose construction guarantees monotonicity.
    pub(crate) fn new_unchecked(grid: GridFunction) -> Self {
        debug_assert!(grid.values.windows(2).all(|w| w[0] <= w[1]));
        Self(grid)
    }

    pub fn as_grid(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_grid(self) -> GridFunction {
        self.0
    }

    pub fn points(&self) -> &[f64] {
        self.0.points()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn weights(&self) -> &[f64] {
        self.0.weights()
    }
}

/// A surface sampled on a rectangular grid. `values` is stored row-major with
/// the s-axis slowest: `value(i, j) = values[i * m2 + j]` for `s_points[i]`,
/// `t_points[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    s_points: Vec<f64>,
    t_points: Vec<f64>,
    values: Vec<f64>,
}

impl SurfaceGrid {
    pub fn new(
        s_points: Vec<f64>,
        t_points: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        check_strictly_increasing(&s_points)?;
        check_strictly_increasing(&t_points)?;
        let expected = s_points.len() * t_points.len();
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                what: "values",
                expected,
                got: values.len(),
            });
        }
        check_finite(&values, "value")?;
        Ok(Self {
            s_points,
            t_points,
            values,
        })
    }

    /// Build from one row per s-point (each row runs along the t-axis).
    pub fn from_rows(
        s_points: Vec<f64>,
        t_points: Vec<f64>,
        rows: &[Vec<f64>],
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(s_points.len() * t_points.len());
        for row in rows {
            values.extend_from_slice(row);
        }
        Self::new(s_points, t_points, values)
    }

    pub fn m1(&self) -> usize {
        self.s_points.len()
    }

    pub fn m2(&self) -> usize {
        self.t_points.len()
    }

    pub fn s_points(&self) -> &[f64] {
        &self.s_points
    }

    pub fn t_points(&self) -> &[f64] {
        &self.t_points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m2() + j]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.s_points.clone(), self.t_points.clone(), values)
    }

}

/// A function sampled on a full p-dimensional lattice, p in 1..=3. Values are
/// row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl LatticeGrid {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, GridError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(GridError::UnsupportedDimension(axes.len()));
        }
        let mut expected = 1usize;
        for axis in &axes {
            check_strictly_increasing(axis)?;
            expected *= axis.len();
        }
        if values.len() != expected {
            return Err(GridError::LengthMismatch {
                what: "values",
                expected,
                got: values.len(),
            });
        }
        check_finite(&values, "value")?;
        Ok(Self { axes, values })
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.axes.clone(), values)
    }
}

impl From<SurfaceGrid> for LatticeGrid {
    fn from(s: SurfaceGrid) -> Self {
        LatticeGrid {
            axes: vec![s.s_points, s.t_points],
            values: s.values,
        }
    }
}

impl TryFrom<LatticeGrid> for SurfaceGrid {
    type Error = GridError;

    fn try_from(l: LatticeGrid) -> Result<Self, GridError> {
        if l.axes.len() != 2 {
            return Err(GridError::UnsupportedDimension(l.axes.len()));
        }
        let mut axes = l.axes.into_iter();
        SurfaceGrid::new(axes.next().unwrap(), axes.next().unwrap(), l.values)
    }
}
