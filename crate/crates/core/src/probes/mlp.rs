//! One-hidden-layer perceptron, `D -> H (ReLU) -> O`, trained with Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Fraction of training rows held out for early stopping.
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_width: 128,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 64,
            validation_fraction: 0.1,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MlpTargets<'a> {
    /// Squared error, `0.5 * mean((f(x) - y)^2)`; single output.
    Real(&'a [f64]),
    /// Softmax cross-entropy averaged over rows; one output per class.
    Class(&'a [usize]),
}

impl MlpTargets<'_> {
    fn len(&self) -> usize {
        match self {
            MlpTargets::Real(y) => y.len(),
            MlpTargets::Class(y) => y.len(),
        }
    }

    fn subset(&self, idx: &[usize]) -> OwnedTargets {
        match self {
            MlpTargets::Real(y) => OwnedTargets::Real(idx.iter().map(|&i| y[i]).collect()),
            MlpTargets::Class(y) => OwnedTargets::Class(idx.iter().map(|&i| y[i]).collect()),
        }
    }
}

enum OwnedTargets {
    Real(Vec<f64>),
    Class(Vec<usize>),
}

impl OwnedTargets {
    fn view(&self) -> MlpTargets<'_> {
        match self {
            OwnedTargets::Real(y) => MlpTargets::Real(y),
            OwnedTargets::Class(y) => MlpTargets::Class(y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Flat parameters: `w1 (H x D)`, `b1 (H)`, `w2 (O x H)`, `b2 (O)`.
    pub params: Vec<f64>,
}

impl Mlp {
    /// He-uniform initialisation for the hidden layer, Glorot-uniform for the output.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut params = vec![0.0; hidden * inputs + hidden + outputs * hidden + outputs];
        let a1 = (6.0 / inputs.max(1) as f64).sqrt();
        for p in &mut params[..hidden * inputs] {
            *p = rng.random_range(-a1..a1);
        }
        let off = hidden * inputs + hidden;
        let a2 = (6.0 / (hidden + outputs) as f64).sqrt();
        for p in &mut params[off..off + outputs * hidden] {
            *p = rng.random_range(-a2..a2);
        }
        Mlp {
            inputs,
            hidden,
            outputs,
            params,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    fn hidden_layer(&self, x: &[f64], h: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        for (k, hk) in h.iter_mut().enumerate() {
            let w = &self.params[k * self.inputs..(k + 1) * self.inputs];
            let s = self.params[b1 + k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *hk = s.max(0.0);
        }
    }

    fn output_layer(&self, h: &[f64], out: &mut [f64]) {
        let (_, w2, b2) = self.offsets();
        for (o, v) in out.iter_mut().enumerate() {
            let w = &self.params[w2 + o * self.hidden..w2 + (o + 1) * self.hidden];
            *v = self.params[b2 + o] + w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Raw outputs (regression value or class logits) for one row.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.outputs];
        self.hidden_layer(x, &mut h);
        self.output_layer(&h, &mut out);
        out
    }

    /// Mean loss over the rows of `x` and its gradient with respect to `params`.
    pub fn loss_and_grad(&self, x: &Matrix, targets: MlpTargets<'_>) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let n = x.rows();
        assert_eq!(n, targets.len(), "targets do not match rows");
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut h = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.outputs];
        let mut d_out = vec![0.0; self.outputs];
        let mut d_h = vec![0.0; self.hidden];
        let scale = 1.0 / n.max(1) as f64;
        for i in 0..n {
            let xi = x.row(i);
            self.hidden_layer(xi, &mut h);
            self.output_layer(&h, &mut out);
            match targets {
                MlpTargets::Real(y) => {
                    let r = out[0] - y[i];
                    loss += 0.5 * r * r;
                    d_out[0] = r * scale;
                }
                MlpTargets::Class(y) => {
                    let m = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = out.iter().map(|v| (v - m).exp()).sum();
                    loss += z.ln() + m - out[y[i]];
                    for (o, d) in d_out.iter_mut().enumerate() {
                        let p = (out[o] - m).exp() / z;
                        *d = (p - f64::from(u8::from(o == y[i]))) * scale;
                    }
                }
            }
            d_h.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..self.outputs {
                let d = d_out[o];
                grad[b2 + o] += d;
                let row = w2 + o * self.hidden;
                for k in 0..self.hidden {
                    grad[row + k] += d * h[k];
                    d_h[k] += d * self.params[row + k];
                }
            }
            for k in 0..self.hidden {
                if h[k] <= 0.0 {
                    continue;
                }
                let d = d_h[k];
                grad[b1 + k] += d;
                let row = &mut grad[k * self.inputs..(k + 1) * self.inputs];
                for (g, xv) in row.iter_mut().zip(xi) {
                    *g += d * xv;
                }
            }
        }
        (loss * scale, grad)
    }

    /// Mini-batch Adam with early stopping on a held-out slice. The
    /// parameters with the best validation loss are kept.
    pub fn train(
        &mut self,
        x: &Matrix,
        targets: MlpTargets<'_>,
        cfg: &MlpConfig,
        rng: &mut ChaCha8Rng,
    ) {
        let n = x.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let n_val = if n >= 10 {
            ((n as f64) * cfg.validation_fraction).round() as usize
        } else {
            0
        };
        let (val_idx, train_idx) = order.split_at(n_val);
        let mut train_idx = train_idx.to_vec();
        let val = (n_val > 0).then(|| (x.select_rows(val_idx), targets.subset(val_idx)));

        let mut m = vec![0.0; self.params.len()];
        let mut v = vec![0.0; self.params.len()];
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut step = 0i32;
        let mut best = (f64::INFINITY, self.params.clone());
        let mut stale = 0;
        for _ in 0..cfg.epochs {
            train_idx.shuffle(rng);
            for batch in train_idx.chunks(cfg.batch_size.max(1)) {
                let xb = x.select_rows(batch);
                let tb = targets.subset(batch);
                let (_, g) = self.loss_and_grad(&xb, tb.view());
                step += 1;
                let c1 = 1.0 - beta1.powi(step);
                let c2 = 1.0 - beta2.powi(step);
                for j in 0..self.params.len() {
                    m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                    v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                    self.params[j] -= cfg.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                }
            }
            if let Some((xv, tv)) = &val {
                let (loss, _) = self.loss_and_grad(xv, tv.view());
                if loss < best.0 {
                    best = (loss, self.params.clone());
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.patience {
                        break;
                    }
                }
            }
        }
        if val.is_some() && best.0.is_finite() {
            self.params = best.1;
        }
    }
}
