//! Per-cell small-vs-big error map driving the Aux-HLC policy.

use crate::domain::{Cell, GridSpec, Trace};
use crate::error::{Error, Result};
use crate::metrics::abs_error_sum;

/// Tolerance for the fallback/support-weighted-mean invariant.
pub const FALLBACK_TOL: f64 = 1e-9;

/// Mean small-minus-big error per grid cell, built on a validation split.
///
/// Cells are stored row-major. A cell no validation frame fell into holds
/// `fallback`, the support-weighted mean over populated cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    grid: GridSpec,
    values: Vec<f64>,
    support: Vec<u64>,
    fallback: f64,
}

impl ErrorMap {
    /// Builds a map from stored parts, checking every invariant.
    pub fn from_parts(grid: GridSpec, values: Vec<f64>, support: Vec<u64>, fallback: f64) -> Result<Self> {
        grid.validate()?;
        let n = grid.n_cells();
        if values.len() != n || support.len() != n {
            return Err(Error::domain(format!(
                "error map for a {}x{} grid needs {n} values and supports (got {} and {})",
                grid.cols,
                grid.rows,
                values.len(),
                support.len()
            )));
        }
        if let Some(v) = values.iter().chain(std::iter::once(&fallback)).find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("error map value {v} is not finite")));
        }
        let total: u64 = support.iter().sum();
        if total == 0 {
            return Err(Error::domain("error map has no supporting samples"));
        }
        for (k, (&v, &s)) in values.iter().zip(&support).enumerate() {
            if s == 0 && v != fallback {
                return Err(Error::domain(format!(
                    "empty cell {} must hold the fallback {fallback}, holds {v}",
                    grid.cell_at(k)
                )));
            }
        }
        let weighted = weighted_mean(&values, &support);
        if (weighted - fallback).abs() > FALLBACK_TOL {
            return Err(Error::domain(format!(
                "fallback {fallback} differs from the support-weighted mean {weighted}"
            )));
        }
        Ok(ErrorMap {
            grid,
            values,
            support,
            fallback,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Row-major cell values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn fallback(&self) -> f64 {
        self.fallback
    }

    pub fn lookup(&self, cell: Cell) -> Result<f64> {
        if !self.grid.contains(cell) {
            return Err(Error::domain(format!(
                "cell {cell} outside {}x{} error map",
                self.grid.cols, self.grid.rows
            )));
        }
        Ok(self.values[self.grid.flat_index(cell)])
    }

    pub fn support_at(&self, cell: Cell) -> Result<u64> {
        self.lookup(cell)?;
        Ok(self.support[self.grid.flat_index(cell)])
    }

    /// Whether the map was built for the same grid (cell layout and image size).
    pub fn matches(&self, grid: &GridSpec) -> bool {
        self.grid == *grid
    }
}

fn weighted_mean(values: &[f64], support: &[u64]) -> f64 {
    let total: u64 = support.iter().sum();
    let acc: f64 = values
        .iter()
        .zip(support)
        .filter(|(_, &s)| s > 0)
        .map(|(v, &s)| v * s as f64)
        .sum();
    acc / total as f64
}

/// Buckets frames by their ground-truth head cell and stores, per cell, the mean
/// small-model error sum minus the mean big-model error sum.
pub fn build_error_map(validation: &Trace) -> Result<ErrorMap> {
    let grid = *validation.grid();
    let n = grid.n_cells();
    let mut small = vec![0.0; n];
    let mut big = vec![0.0; n];
    let mut support = vec![0u64; n];
    for f in validation.frames() {
        let k = grid.flat_index(f.true_cell(&grid)?);
        small[k] += abs_error_sum(f.small_pred, f.gt);
        big[k] += abs_error_sum(f.big_pred, f.gt);
        support[k] += 1;
    }
    if support.iter().all(|&s| s == 0) {
        return Err(Error::domain("cannot build an error map from an empty trace"));
    }
    let mut values: Vec<f64> = (0..n)
        .map(|k| {
            if support[k] == 0 {
                0.0
            } else {
                let c = support[k] as f64;
                small[k] / c - big[k] / c
            }
        })
        .collect();
    let fallback = weighted_mean(&values, &support);
    for (v, &s) in values.iter_mut().zip(&support) {
        if s == 0 {
            *v = fallback;
        }
    }
    ErrorMap::from_parts(grid, values, support, fallback)
}
