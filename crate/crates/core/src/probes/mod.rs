//! Probes: regressors decoding one feature from pooled embeddings, and
//! classifiers predicting the best algorithm.
//!
//! Every probe standardizes its inputs and drops zero-variance columns
//! first. Training is deterministic given [`TrainConfig::seed`], and models
//! serialize to a small versioned binary format (see [`ProbeModel::to_bytes`]).

mod gbdt;
mod linear;
mod logistic;
mod mlp;
mod preprocess;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gbdt::{Booster, Ensemble, GbdtConfig, HistogramBooster, Node, Tree};
pub use linear::LinearModel;
pub use logistic::{LogisticConfig, LogisticModel};
pub use mlp::{Mlp, MlpConfig, MlpTargets};
pub use preprocess::Standardizer;

use crate::matrix::Matrix;
use crate::util::rng_for;

pub const MODEL_MAGIC: &[u8; 4] = b"COPM";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Linear,
    Mlp,
    Gbdt,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 3] = [
        RegressorKind::Linear,
        RegressorKind::Mlp,
        RegressorKind::Gbdt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::Linear => "linear",
            RegressorKind::Mlp => "mlp",
            RegressorKind::Gbdt => "gbdt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    MostFrequent,
    Logistic,
    Mlp,
    Gbdt,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::MostFrequent,
        ClassifierKind::Logistic,
        ClassifierKind::Mlp,
        ClassifierKind::Gbdt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::MostFrequent => "most_frequent",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Gbdt => "gbdt",
        }
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegressorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RegressorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown regressor `{s}`"))
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown classifier `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Regressor(RegressorKind),
    Classifier(ClassifierKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub mlp: MlpConfig,
    pub gbdt: GbdtConfig,
    pub logistic: LogisticConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("{rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("input has {found} columns, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("model is a {0}, not usable for this task")]
    WrongTask(&'static str),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("not a serialized probe model")]
    BadMagic,
    #[error("unsupported model version {0}")]
    Version(u16),
    #[error("model decode: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Params {
    Constant(f64),
    Linear(LinearModel),
    Mlp {
        net: Mlp,
        y_mean: f64,
        y_std: f64,
    },
    Gbdt(Ensemble),
    Label(String),
    Logistic {
        classes: Vec<String>,
        model: LogisticModel,
    },
    MlpClassifier {
        classes: Vec<String>,
        net: Mlp,
    },
    GbdtClassifier {
        classes: Vec<String>,
        boosters: Vec<Ensemble>,
    },
}

/// A trained probe. Prediction is a pure function of the model and input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub kind: ProbeKind,
    pub seed: u64,
    pub preprocess: Standardizer,
    pub params: Params,
}

impl ProbeModel {
    /// `"COPM"`, a little-endian `u16` version, then the bincode encoding
    /// of the model.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MODEL_MAGIC.to_vec();
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend(bincode::serialize(self).expect("probe model serializes"));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProbeError> {
        if bytes.len() < 6 || &bytes[..4] != MODEL_MAGIC {
            return Err(ProbeError::BadMagic);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != MODEL_VERSION {
            return Err(ProbeError::Version(version));
        }
        bincode::deserialize(&bytes[6..]).map_err(|e| ProbeError::Decode(e.to_string()))
    }

    pub fn input_dim(&self) -> usize {
        self.preprocess.input_dim
    }
}

fn check_inputs(x: &Matrix, targets: usize) -> Result<(), ProbeError> {
    if x.rows() != targets {
        return Err(ProbeError::LengthMismatch {
            rows: x.rows(),
            targets,
        });
    }
    if x.rows() < 2 {
        return Err(ProbeError::TooFewRows(x.rows()));
    }
    if x.as_slice().iter().any(|v| v.is_infinite()) {
        return Err(ProbeError::NonFinite("inputs"));
    }
    Ok(())
}

fn transform(model: &ProbeModel, x: &Matrix) -> Result<Matrix, ProbeError> {
    if x.cols() != model.preprocess.input_dim {
        return Err(ProbeError::DimensionMismatch {
            expected: model.preprocess.input_dim,
            found: x.cols(),
        });
    }
    Ok(model.preprocess.transform(x))
}

pub fn train_regressor(
    kind: RegressorKind,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
) -> Result<ProbeModel, ProbeError> {
    train_regressor_with(kind, x, y, cfg, &HistogramBooster)
}

/// As [`train_regressor`], with `booster` backing the `gbdt` kind.
pub fn train_regressor_with(
    kind: RegressorKind,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    booster: &dyn Booster,
) -> Result<ProbeModel, ProbeError> {
    check_inputs(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ProbeError::NonFinite("targets"));
    }
    let preprocess = Standardizer::fit(x);
    let z = preprocess.transform(x);
    let params = if y.iter().all(|&v| v == y[0]) {
        Params::Constant(y[0])
    } else {
        match kind {
            RegressorKind::Linear => Params::Linear(LinearModel::fit(&z, y)),
            RegressorKind::Mlp => {
                let (y_mean, y_std) = preprocess::target_stats(y);
                let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
                let mut rng = rng_for(cfg.seed, &[b"mlp"]);
                let mut net = Mlp::new(z.cols(), cfg.mlp.hidden_width, 1, &mut rng);
                net.train(&z, MlpTargets::Real(&ys), &cfg.mlp, &mut rng);
                Params::Mlp { net, y_mean, y_std }
            }
            RegressorKind::Gbdt => Params::Gbdt(booster.fit_regression(&z, y, &cfg.gbdt)),
        }
    };
    Ok(ProbeModel {
        kind: ProbeKind::Regressor(kind),
        seed: cfg.seed,
        preprocess,
        params,
    })
}

pub fn predict_regressor(model: &ProbeModel, x: &Matrix) -> Result<Vec<f64>, ProbeError> {
    if !matches!(model.kind, ProbeKind::Regressor(_)) {
        return Err(ProbeError::WrongTask("classifier"));
    }
    let z = transform(model, x)?;
    Ok(z.iter_rows()
        .map(|r| match &model.params {
            Params::Constant(c) => *c,
            Params::Linear(m) => m.predict_row(r),
            Params::Mlp { net, y_mean, y_std } => y_mean + y_std * net.forward(r)[0],
            Params::Gbdt(e) => e.predict(r),
            _ => unreachable!("regressor with classifier parameters"),
        })
        .collect())
}

/// Most frequent label; ties go to the lexicographically smallest.
fn modal_label(labels: &[String]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map(|(l, _)| l.to_owned())
        .unwrap_or_default()
}

pub fn train_classifier<S: AsRef<str>>(
    kind: ClassifierKind,
    x: &Matrix,
    labels: &[S],
    cfg: &TrainConfig,
) -> Result<ProbeModel, ProbeError> {
    check_inputs(x, labels.len())?;
    let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
    let preprocess = Standardizer::fit(x);
    let z = preprocess.transform(x);
    let classes: Vec<String> = {
        let mut c = labels.clone();
        c.sort();
        c.dedup();
        c
    };
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is a class"))
        .collect();
    let params = if kind == ClassifierKind::MostFrequent || classes.len() == 1 {
        Params::Label(modal_label(&labels))
    } else {
        match kind {
            ClassifierKind::MostFrequent => unreachable!(),
            ClassifierKind::Logistic => {
                let model = LogisticModel::fit(&z, &y, classes.len(), &cfg.logistic)
                    .map_err(ProbeError::Optimizer)?;
                Params::Logistic { classes, model }
            }
            ClassifierKind::Mlp => {
                let mut rng = rng_for(cfg.seed, &[b"mlp-classifier"]);
                let mut net = Mlp::new(z.cols(), cfg.mlp.hidden_width, classes.len(), &mut rng);
                net.train(&z, MlpTargets::Class(&y), &cfg.mlp, &mut rng);
                Params::MlpClassifier { classes, net }
            }
            ClassifierKind::Gbdt => {
                let boosters = (0..classes.len())
                    .map(|k| {
                        let yk: Vec<f64> = y.iter().map(|&c| f64::from(u8::from(c == k))).collect();
                        HistogramBooster.fit_binary(&z, &yk, &cfg.gbdt)
                    })
                    .collect();
                Params::GbdtClassifier { classes, boosters }
            }
        }
    };
    Ok(ProbeModel {
        kind: ProbeKind::Classifier(kind),
        seed: cfg.seed,
        preprocess,
        params,
    })
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn predict_classifier(model: &ProbeModel, x: &Matrix) -> Result<Vec<String>, ProbeError> {
    if !matches!(model.kind, ProbeKind::Classifier(_)) {
        return Err(ProbeError::WrongTask("regressor"));
    }
    let z = transform(model, x)?;
    Ok(z.iter_rows()
        .map(|r| match &model.params {
            Params::Label(l) => l.clone(),
            Params::Logistic { classes, model } => classes[argmax(&model.scores(r))].clone(),
            Params::MlpClassifier { classes, net } => classes[argmax(&net.forward(r))].clone(),
            Params::GbdtClassifier { classes, boosters } => {
                let s: Vec<f64> = boosters.iter().map(|b| b.predict(r)).collect();
                classes[argmax(&s)].clone()
            }
            _ => unreachable!("classifier with regressor parameters"),
        })
        .collect())
}
