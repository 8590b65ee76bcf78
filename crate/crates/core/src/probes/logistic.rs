use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Inverse L2 strength; the objective is `C * sum(CE) + 0.5 * |W|^2`.
    pub c: f64,
    pub max_iters: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            c: 1.0,
            max_iters: 500,
        }
    }
}

/// Multinomial logistic regression; `weights` is `K x (D + 1)` with the
/// unpenalised intercept last in each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
}

struct Objective<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    classes: usize,
    c: f64,
}

impl Objective<'_> {
    fn eval(&self, w: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let d = self.x.cols();
        let stride = d + 1;
        let mut grad = if want_grad {
            vec![0.0; w.len()]
        } else {
            Vec::new()
        };
        let mut loss = 0.0;
        let mut logits = vec![0.0; self.classes];
        for (i, xi) in self.x.iter_rows().enumerate() {
            for (k, l) in logits.iter_mut().enumerate() {
                let row = &w[k * stride..(k + 1) * stride];
                *l = row[d] + row[..d].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            loss += self.c * (z.ln() + m - logits[self.y[i]]);
            if want_grad {
                for k in 0..self.classes {
                    let p = (logits[k] - m).exp() / z;
                    let r = self.c * (p - f64::from(u8::from(k == self.y[i])));
                    let g = &mut grad[k * stride..(k + 1) * stride];
                    for (gj, xj) in g[..d].iter_mut().zip(xi) {
                        *gj += r * xj;
                    }
                    g[d] += r;
                }
            }
        }
        for k in 0..self.classes {
            for j in 0..d {
                let v = w[k * stride + j];
                loss += 0.5 * v * v;
                if want_grad {
                    grad[k * stride + j] += v;
                }
            }
        }
        (loss, grad)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        Ok(self.eval(p, false).0)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        Ok(self.eval(p, true).1)
    }
}

impl LogisticModel {
    pub fn fit(
        z: &Matrix,
        y: &[usize],
        classes: usize,
        cfg: &LogisticConfig,
    ) -> Result<Self, String> {
        let dim = z.cols();
        let objective = Objective {
            x: z,
            y,
            classes,
            c: cfg.c,
        };
        let init = vec![0.0; classes * (dim + 1)];
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
            .with_tolerance_grad(1e-8)
            .and_then(|s| s.with_tolerance_cost(1e-14))
            .map_err(|e| e.to_string())?;
        let res = Executor::new(objective, solver)
            .configure(|s| s.param(init).max_iters(cfg.max_iters))
            .run()
            .map_err(|e| e.to_string())?;
        let weights = res
            .state
            .best_param
            .or(res.state.param)
            .ok_or("optimizer returned no parameters")?;
        Ok(LogisticModel {
            classes,
            dim,
            weights,
        })
    }

    pub fn scores(&self, z: &[f64]) -> Vec<f64> {
        let stride = self.dim + 1;
        (0..self.classes)
            .map(|k| {
                let row = &self.weights[k * stride..(k + 1) * stride];
                row[self.dim]
                    + row[..self.dim]
                        .iter()
                        .zip(z)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradient() {
        let x = Matrix::from_rows(2, [[0.5, -1.0], [1.5, 0.2], [-0.3, 0.7]]);
        let y = [0, 1, 2];
        let obj = Objective {
            x: &x,
            y: &y,
            classes: 3,
            c: 1.0,
        };
        let w: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) * 0.1).collect();
        let (_, g) = obj.eval(&w, true);
        for j in 0..w.len() {
            let mut a = w.clone();
            a[j] += 1e-6;
            let mut b = w.clone();
            b[j] -= 1e-6;
            let fd = (obj.eval(&a, false).0 - obj.eval(&b, false).0) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6, "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn separates_two_clusters() {
        let x = Matrix::from_rows(1, [[-2.0], [-1.0], [1.0], [2.0]]);
        let m = LogisticModel::fit(&x, &[0, 0, 1, 1], 2, &LogisticConfig::default()).unwrap();
        let s = m.scores(&[1.5]);
        assert!(s[1] > s[0]);
    }
}
