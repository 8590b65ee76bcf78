use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Per-column standardization fitted on training rows. Columns whose finite
/// values are all identical are dropped; missing entries (NaN) are imputed
/// with the column mean, i.e. 0 after scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_dim: usize,
    pub kept: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let mut kept = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for j in 0..x.cols() {
            let col: Vec<f64> = (0..x.rows())
                .map(|i| x.get(i, j))
                .filter(|v| v.is_finite())
                .collect();
            let Some(&first) = col.first() else { continue };
            if col.iter().all(|&v| v == first) {
                continue;
            }
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if !(std > 0.0) || !std.is_finite() {
                continue;
            }
            kept.push(j);
            means.push(mean);
            stds.push(std);
        }
        Standardizer {
            input_dim: x.cols(),
            kept,
            means,
            stds,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let k = self.kept.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for i in 0..x.rows() {
            let src = x.row(i);
            let dst = out.row_mut(i);
            for (c, &j) in self.kept.iter().enumerate() {
                let v = src[j];
                dst[c] = if v.is_finite() {
                    (v - self.means[c]) / self.stds[c]
                } else {
                    0.0
                };
            }
        }
        out
    }
}

/// Mean and population standard deviation of a target vector.
pub(crate) fn target_stats(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_constant_columns_and_scales() {
        let x = Matrix::from_rows(3, [[1.0, 5.0, 2.0], [3.0, 5.0, 2.0], [5.0, 5.0, 2.0]]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.kept, vec![0]);
        let z = s.transform(&x);
        assert_eq!(z.cols(), 1);
        let expected = 2.0 / (8.0f64 / 3.0).sqrt();
        assert!((z.get(0, 0) + expected).abs() < 1e-12);
        assert_eq!(z.get(1, 0), 0.0);
    }

    #[test]
    fn nan_aware() {
        let x = Matrix::from_rows(2, [[1.0, f64::NAN], [3.0, 4.0], [f64::NAN, 6.0]]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.means, vec![2.0, 5.0]);
        let z = s.transform(&x);
        assert_eq!(z.get(0, 1), 0.0);
        assert_eq!(z.get(2, 0), 0.0);
    }
}
