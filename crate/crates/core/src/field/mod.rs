//! Scalar fields on the discretized flat quaternionic torus and the
//! quaternionic calculus acting on them.

mod calculus;
mod grid;
mod modes;
mod pointwise;
pub mod spectral;

use rayon::prelude::*;
use thiserror::Error;

use crate::quat::LinalgError;

pub use calculus::{
    crf_derivative, derivative_sup_norms, grad_sup_norm, q_hessian, q_hessian_and_grad_sup, q_hessian_unsymmetrized, q_laplacian, CrfVariant,
    HessianField, QuaternionField, RawHessianField,
};
pub use grid::{Coord, TorusGrid};
pub use modes::{Mode, ModeSum};
pub use pointwise::{evaluate_operator, manufacture_h, point_eigenvalues, OperatorField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("mode sum {path}: {message}")]
    Mode { path: String, message: String },
    #[error("quaternionic index {r} out of range for n = {n}")]
    IndexOutOfRange { r: usize, n: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("value count {found} does not match grid size {expected}")]
    Length { expected: usize, found: usize },
    #[error("not admissible at grid point {point}: cone margin {margin:e}")]
    Inadmissible { point: usize, margin: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Leaf size of the fixed summation tree.
pub const SUM_BLOCK: usize = 256;

/// Sequential sums of consecutive `SUM_BLOCK`-sized blocks.
pub fn block_partials(values: &[f64]) -> Vec<f64> {
    values
        .par_chunks(SUM_BLOCK)
        .map(|c| c.iter().sum::<f64>())
        .collect()
}

/// Balanced binary reduction of block partials.
pub fn tree_sum(partials: &[f64]) -> f64 {
    match partials.len() {
        0 => 0.0,
        1 => partials[0],
        len => {
            let mid = len / 2;
            tree_sum(&partials[..mid]) + tree_sum(&partials[mid..])
        }
    }
}

/// Sum with a reduction tree fixed by the length alone, so the result does
/// not depend on thread count or evaluation order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    tree_sum(&block_partials(values))
}

/// A real function sampled on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every grid point; `f` receives the active coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let axes = grid.active().len();
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; axes],
                |x, idx| {
                    grid.point(idx, x);
                    f(x)
                },
            )
            .collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup − inf`.
    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn grad_sup_norm(&self) -> f64 {
        grad_sup_norm(self)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_grid(&self, other: &ScalarField) -> Result<(), FieldError> {
        if self.grid != other.grid {
            Err(FieldError::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &ScalarField) -> Result<ScalarField, FieldError> {
        self.check_grid(other)?;
        let values = self
            .values
            .par_iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField, FieldError> {
        self.add_scaled(-1.0, other)
    }

    pub fn shift(&self, c: f64) -> ScalarField {
        self.map(|v| v + c)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Max-abs difference.
    pub fn dist_sup(&self, other: &ScalarField) -> Result<f64, FieldError> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub fn mean(u: &ScalarField) -> f64 {
    u.mean()
}

pub fn osc(u: &ScalarField) -> f64 {
    u.osc()
}

pub fn sup_norm(u: &ScalarField) -> f64 {
    u.sup_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_statistics() {
        let grid = TorusGrid::full(1, 4).unwrap();
        let u = ScalarField::constant(&grid, 2.5);
        assert_eq!(u.mean(), 2.5);
        assert_eq!(u.osc(), 0.0);
    }

    #[test]
    fn cosine_statistics() {
        let grid = TorusGrid::full(1, 8).unwrap();
        let u = ScalarField::from_fn(&grid, |x| x[0].cos());
        assert!(u.mean().abs() < 1e-14);
        assert!((u.osc() - 2.0).abs() < 1e-14);
        assert!((u.sup_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shuffled_block_evaluation_matches_fixed_tree() {
        let values: Vec<f64> = (0..10_000).map(|i| ((i as f64) * 0.7311).sin() * 1e3 + 1e-3 * i as f64).collect();
        let reference = pairwise_sum(&values);
        let blocks: Vec<&[f64]> = values.chunks(SUM_BLOCK).collect();
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        // deterministic shuffle
        for i in (1..order.len()).rev() {
            let j = (i * 7919 + 13) % (i + 1);
            order.swap(i, j);
        }
        let mut slots = vec![0.0; blocks.len()];
        for &b in &order {
            slots[b] = blocks[b].iter().sum();
        }
        assert_eq!(tree_sum(&slots).to_bits(), reference.to_bits());
    }

    #[test]
    fn length_is_validated() {
        let grid = TorusGrid::full(1, 4).unwrap();
        assert!(matches!(
            ScalarField::new(&grid, vec![0.0; 3]),
            Err(FieldError::Length { expected: 256, found: 3 })
        ));
    }
}
