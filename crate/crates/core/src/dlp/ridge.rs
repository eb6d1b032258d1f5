use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue below which an unregularized system counts as singular.
const SINGULAR_THRESHOLD: f64 = 1e-10;

/// Dual coefficients of kernel ridge regression.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    pub alpha: Vec<f64>,
}

/// Solves `(K + λI)α = y`.
pub fn train_kernel_classifier(k: &DMatrix<f64>, labels: &[f64], lambda: f64) -> Result<RidgeModel> {
    let n = labels.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::domain(format!(
            "{}x{} kernel for {n} labels",
            k.nrows(),
            k.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::domain("no training samples"));
    }
    if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::domain(format!("label must be +1 or -1, got {y}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("ridge must be non-negative, got {lambda}")));
    }
    let system = k + DMatrix::identity(n, n) * lambda;
    let eig = SymmetricEigen::new((&system + system.transpose()) * 0.5);
    let largest = eig.eigenvalues.abs().max();
    if eig.eigenvalues.abs().min() <= SINGULAR_THRESHOLD * largest.max(1.0) {
        return Err(Error::Solver(format!(
            "kernel system is singular at ridge {lambda}; use a positive ridge"
        )));
    }
    let alpha = system
        .lu()
        .solve(&DVector::from_column_slice(labels))
        .ok_or_else(|| Error::Solver("kernel system is singular; use a positive ridge".into()))?;
    Ok(RidgeModel {
        alpha: alpha.iter().copied().collect(),
    })
}

impl RidgeModel {
    /// `sign(Σ_j α_j K(x_j, x))` with ties to +1, given the kernel row of `x`
    /// against the training samples.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.alpha.len() {
            return Err(Error::domain("kernel row length differs from the training set"));
        }
        let s: f64 = self.alpha.iter().zip(row).map(|(a, k)| a * k).sum();
        Ok(if s >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Predictions for every row of a test-by-train kernel block.
    pub fn predict_block(&self, block: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..block.nrows())
            .map(|r| {
                let row: Vec<f64> = block.row(r).iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }
}

/// Prediction for a fresh point from its kernel against the training samples.
pub fn kernel_predict(model: &RidgeModel, train: &[u64], x: u64, kernel: impl Fn(u64, u64) -> Result<f64>) -> Result<f64> {
    let row = train.iter().map(|&t| kernel(t, x)).collect::<Result<Vec<_>>>()?;
    model.predict_row(&row)
}
