//! Histogram-based gradient-boosted decision trees.
//!
//! Regression boosts squared error; classification trains one binary
//! logistic booster per class. Leaves take the Newton step
//! `-G / (H + lambda)`.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    pub lambda: f64,
    pub max_bins: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_leaf: 20,
            lambda: 1.0,
            max_bins: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Additive model `base + learning_rate * sum(trees)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training loss after each round (squared error for regression,
    /// log loss for binary boosters).
    pub train_loss: Vec<f64>,
}

impl Ensemble {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Plug-in point for an alternative boosting backend. Implementations return
/// their model in the [`Ensemble`] form so it serializes with the probe.
pub trait Booster: Send + Sync {
    fn fit_regression(&self, x: &Matrix, y: &[f64], cfg: &GbdtConfig) -> Ensemble;
    /// `y` holds 0/1 targets; the ensemble outputs a log-odds margin.
    fn fit_binary(&self, x: &Matrix, y: &[f64], cfg: &GbdtConfig) -> Ensemble;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HistogramBooster;

struct Binned {
    /// Column-major bin indices.
    bins: Vec<Vec<u16>>,
    thresholds: Vec<Vec<f64>>,
}

fn bin_columns(x: &Matrix, max_bins: usize) -> Binned {
    let mut bins = Vec::with_capacity(x.cols());
    let mut thresholds = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col: Vec<f64> = (0..x.rows()).map(|i| x.get(i, j)).collect();
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let cuts: Vec<f64> = if sorted.len() <= max_bins {
            sorted.windows(2).map(|w| w[0]).collect()
        } else {
            let mut c: Vec<f64> = (1..max_bins)
                .map(|b| sorted[b * sorted.len() / max_bins - 1])
                .collect();
            c.dedup();
            c
        };
        bins.push(
            col.iter()
                .map(|&v| cuts.partition_point(|&t| t < v) as u16)
                .collect(),
        );
        thresholds.push(cuts);
    }
    Binned { bins, thresholds }
}

struct Builder<'a> {
    binned: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: &'a GbdtConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        -g / (h + self.cfg.lambda)
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, usize, f64)> {
        let lambda = self.cfg.lambda;
        let g_tot: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h_tot: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let parent = g_tot * g_tot / (h_tot + lambda);
        let mut best: Option<(usize, usize, f64)> = None;
        for (j, cuts) in self.binned.thresholds.iter().enumerate() {
            if cuts.is_empty() {
                continue;
            }
            let nb = cuts.len() + 1;
            let mut hg = vec![0.0; nb];
            let mut hh = vec![0.0; nb];
            let mut hc = vec![0usize; nb];
            for &i in rows {
                let b = self.binned.bins[j][i] as usize;
                hg[b] += self.grad[i];
                hh[b] += self.hess[i];
                hc[b] += 1;
            }
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for b in 0..nb - 1 {
                gl += hg[b];
                hl += hh[b];
                cl += hc[b];
                let cr = rows.len() - cl;
                if cl < self.cfg.min_leaf {
                    continue;
                }
                if cr < self.cfg.min_leaf {
                    break;
                }
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((j, b, gain));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let split = if depth < self.cfg.max_depth && rows.len() >= 2 * self.cfg.min_leaf.max(1) {
            self.best_split(&rows)
        } else {
            None
        };
        match split {
            None => self.nodes[id] = Node::Leaf(self.leaf_value(&rows)),
            Some((feature, bin, _)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| (self.binned.bins[feature][i] as usize) <= bin);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                let threshold = self.binned.thresholds[feature][bin];
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }
}

fn boost(
    x: &Matrix,
    cfg: &GbdtConfig,
    base: f64,
    grad_hess: impl Fn(&[f64], &mut [f64], &mut [f64]),
    loss: impl Fn(&[f64]) -> f64,
) -> Ensemble {
    let binned = bin_columns(x, cfg.max_bins.clamp(2, u16::MAX as usize));
    let n = x.rows();
    let mut margin = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut train_loss = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        grad_hess(&margin, &mut grad, &mut hess);
        let mut b = Builder {
            binned: &binned,
            grad: &grad,
            hess: &hess,
            cfg,
            nodes: Vec::new(),
        };
        b.build((0..n).collect(), 0);
        let tree = Tree { nodes: b.nodes };
        for (i, m) in margin.iter_mut().enumerate() {
            *m += cfg.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
        train_loss.push(loss(&margin));
    }
    Ensemble {
        base,
        learning_rate: cfg.learning_rate,
        trees,
        train_loss,
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Booster for HistogramBooster {
    fn fit_regression(&self, x: &Matrix, y: &[f64], cfg: &GbdtConfig) -> Ensemble {
        let base = y.iter().sum::<f64>() / y.len().max(1) as f64;
        boost(
            x,
            cfg,
            base,
            |m, g, h| {
                for i in 0..m.len() {
                    g[i] = m[i] - y[i];
                    h[i] = 1.0;
                }
            },
            |m| m.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64,
        )
    }

    fn fit_binary(&self, x: &Matrix, y: &[f64], cfg: &GbdtConfig) -> Ensemble {
        let p = (y.iter().sum::<f64>() / y.len().max(1) as f64).clamp(1e-6, 1.0 - 1e-6);
        boost(
            x,
            cfg,
            (p / (1.0 - p)).ln(),
            |m, g, h| {
                for i in 0..m.len() {
                    let p = sigmoid(m[i]);
                    g[i] = p - y[i];
                    h[i] = (p * (1.0 - p)).max(1e-12);
                }
            },
            |m| {
                m.iter()
                    .zip(y)
                    .map(|(&v, &t)| {
                        let p = sigmoid(v).clamp(1e-15, 1.0 - 1e-15);
                        -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
                    })
                    .sum::<f64>()
                    / y.len() as f64
            },
        )
    }
}
