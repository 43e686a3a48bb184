//! Uniform grids indexed by signed multi-indices, and the coefficient
//! fields living on them.
//!
//! A grid is anchored at the origin: the point of multi-index `j` is `j * h`
//! componentwise. Fields store one value per point, flattened row-major with
//! the last axis fastest, plus the simulation time they belong to.

use thiserror::Error;

use crate::NormP;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid spacing must be positive and finite, got {h}")]
    InvalidSpacing { h: f64 },
    #[error("grid needs 1 to 3 axes, got {dims}")]
    BadDimension { dims: usize },
    #[error("axis {axis} has empty index range {lo}..={hi}")]
    EmptyAxis { axis: usize, lo: i64, hi: i64 },
    #[error("field has {values} values for a grid of {points} points")]
    ValueCountMismatch { values: usize, points: usize },
}

/// Axis-aligned uniform grid with spacing `h`, covering the inclusive index
/// box `lo..=hi` per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    h: f64,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl UniformGrid {
    pub fn new(h: f64, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, GridError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GridError::InvalidSpacing { h });
        }
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 3 {
            return Err(GridError::BadDimension {
                dims: lo.len().max(hi.len()),
            });
        }
        for (axis, (&l, &u)) in lo.iter().zip(&hi).enumerate() {
            if l > u {
                return Err(GridError::EmptyAxis { axis, lo: l, hi: u });
            }
        }
        Ok(UniformGrid { h, lo, hi })
    }

    /// One-dimensional grid over the index range `lo..=hi`.
    pub fn line(h: f64, lo: i64, hi: i64) -> Result<Self, GridError> {
        UniformGrid::new(h, vec![lo], vec![hi])
    }

    /// Grid whose index box snaps each window end to the nearest grid
    /// point. Window ends that are integer multiples of `h` map exactly.
    pub fn covering(h: f64, window: &[(f64, f64)]) -> Result<Self, GridError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GridError::InvalidSpacing { h });
        }
        let lo = window.iter().map(|&(a, _)| (a / h).round() as i64).collect();
        let hi = window.iter().map(|&(_, b)| (b / h).round() as i64).collect();
        UniformGrid::new(h, lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    /// Point count along one axis.
    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    /// Total point count.
    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Coordinates of the multi-index `j`, written into `out`.
    pub fn point_into(&self, j: &[i64], out: &mut [f64]) {
        for (o, &ji) in out.iter_mut().zip(j) {
            *o = ji as f64 * self.h;
        }
    }

    /// Decodes a flat offset into the multi-index it addresses.
    pub fn multi_index(&self, flat: usize) -> Vec<i64> {
        let mut j = vec![0i64; self.dim()];
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let extent = self.extent(axis);
            j[axis] = self.lo[axis] + (rest % extent) as i64;
            rest /= extent;
        }
        j
    }

    /// Calls `f` with each flat offset and the coordinates of its point,
    /// in storage order.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let dim = self.dim();
        let mut j = self.lo.clone();
        let mut x = vec![0.0; dim];
        for flat in 0..self.len() {
            self.point_into(&j, &mut x);
            f(flat, &x);
            for axis in (0..dim).rev() {
                j[axis] += 1;
                if j[axis] <= self.hi[axis] {
                    break;
                }
                j[axis] = self.lo[axis];
            }
        }
    }
}

/// Values attached to the points of a [`UniformGrid`] at one simulation
/// time: either raw samples or scheme coefficients, depending on use.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    grid: UniformGrid,
    values: Vec<f64>,
    time: f64,
}

impl CoefficientField {
    pub fn zeros(grid: UniformGrid) -> Self {
        let values = vec![0.0; grid.len()];
        CoefficientField {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn from_values(
        grid: UniformGrid,
        values: Vec<f64>,
        time: f64,
    ) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ValueCountMismatch {
                values: values.len(),
                points: grid.len(),
            });
        }
        Ok(CoefficientField { grid, values, time })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: UniformGrid, time: f64, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|flat, x| values[flat] = f(x));
        CoefficientField { grid, values, time }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }
}

/// Discrete p-norm weighted by the cell volume:
/// `(h^dim * sum |v_j|^p)^(1/p)`, or the plain maximum for `p = inf`.
pub fn discrete_norm(field: &CoefficientField, p: NormP) -> f64 {
    let values = field.values();
    match p {
        NormP::One => field.grid().cell_volume() * values.iter().map(|v| v.abs()).sum::<f64>(),
        NormP::Two => {
            (field.grid().cell_volume() * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
        }
        NormP::Inf => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    }
}
