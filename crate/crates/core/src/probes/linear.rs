use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Ordinary least squares on already-standardized columns, solved through
/// the SVD so rank-deficient designs get the minimum-norm solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn fit(z: &Matrix, y: &[f64]) -> Self {
        let n = z.rows();
        let intercept = y.iter().sum::<f64>() / n as f64;
        if z.cols() == 0 {
            return LinearModel {
                coef: Vec::new(),
                intercept,
            };
        }
        // Standardized columns are centered, so the intercept decouples.
        let mut a = DMatrix::from_row_slice(n, z.cols(), z.as_slice());
        for j in 0..z.cols() {
            let mean = a.column(j).mean();
            a.column_mut(j).add_scalar_mut(-mean);
        }
        let b = DVector::from_iterator(n, y.iter().map(|v| v - intercept));
        let svd = a.svd(true, true);
        let max_sv = svd.singular_values.max();
        let eps = max_sv * 1e-12 * n.max(z.cols()) as f64;
        let coef = match svd.solve(&b, eps) {
            Ok(w) => w.iter().copied().collect(),
            Err(_) => vec![0.0; z.cols()],
        };
        let shift: f64 = (0..z.cols())
            .map(|j| coef[j] * z.iter_rows().map(|r| r[j]).sum::<f64>() / n as f64)
            .sum();
        LinearModel {
            coef,
            intercept: intercept - shift,
        }
    }

    pub fn predict_row(&self, z: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let z = Matrix::from_rows(1, [[-1.0], [0.0], [1.0]]);
        let m = LinearModel::fit(&z, &[1.0, 3.0, 5.0]);
        assert!((m.coef[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_columns_share_weight() {
        let z = Matrix::from_rows(2, [[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]]);
        let m = LinearModel::fit(&z, &[-2.0, 0.0, 2.0]);
        assert!((m.coef[0] - 1.0).abs() < 1e-9 && (m.coef[1] - 1.0).abs() < 1e-9);
    }
}
