//! Summaries of posterior samples and raw data: co-occupancy, representative
//! clustering, question fit, distance matrices and polarization.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

mod cooccupancy;
mod distances;
mod fit;
mod kmeans;
mod medoids;
mod polarization;

pub use cooccupancy::{bloc_ordering, bloc_proportions, bloc_support, cooccupancy};
pub use distances::{clr_distance_export, js_distance, js_matrix};
pub use fit::{fit_from_columns, flag_threshold, predicted_column, question_fit, QuestionFitTable};
pub(crate) use kmeans::kmeans_rows;
pub use medoids::{clustering_cost, k_medoids, k_medoids_with, RepresentativeClustering, DEFAULT_RESTARTS};
pub use polarization::{polarization_series, PolarizationRecord, SupportWeighting};

/// Dense row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Pairwise co-occupancy frequencies, `N × N`.
pub type CooccupancyMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(invalid!(
                "{} values cannot fill a {rows} x {cols} matrix",
                values.len()
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Rows and columns of a square matrix reordered so that new index `r`
    /// holds old index `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if !self.is_square() || order.len() != self.rows {
            return Err(invalid!("ordering of length {} does not fit the matrix", order.len()));
        }
        let n = self.rows;
        let mut seen = alloc::vec![false; n];
        for &o in order {
            if o >= n || core::mem::replace(&mut seen[o], true) {
                return Err(invalid!("ordering is not a permutation"));
            }
        }
        let mut out = Self::zeros(n, n);
        for (r, &i) in order.iter().enumerate() {
            for (c, &j) in order.iter().enumerate() {
                out.set(r, c, self.get(i, j));
            }
        }
        Ok(out)
    }

    /// Elementwise `1 - x`, the distance used for clustering co-occupancy.
    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }
}
