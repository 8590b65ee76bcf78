//! Reduce a `T x D` activation matrix to one `D`-vector per instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llmio::ActivationMatrix;
use crate::render::Representation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingStrategy {
    /// Column-wise mean over all tokens.
    Mean,
    /// Column-wise maximum over all tokens.
    Max,
    /// The final row, i.e. the end-of-sequence position.
    Last,
}

impl PoolingStrategy {
    pub const ALL: [PoolingStrategy; 3] = [
        PoolingStrategy::Mean,
        PoolingStrategy::Max,
        PoolingStrategy::Last,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoolingStrategy::Mean => "mean",
            PoolingStrategy::Max => "max",
            PoolingStrategy::Last => "last",
        }
    }
}

impl fmt::Display for PoolingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(PoolingStrategy::Mean),
            "max" => Ok(PoolingStrategy::Max),
            "last" | "eos" => Ok(PoolingStrategy::Last),
            other => Err(format!("unknown pooling strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEmbedding {
    pub instance_name: String,
    pub representation: Representation,
    pub strategy: PoolingStrategy,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolingError {
    #[error("activation matrix for `{0}` has no rows")]
    Empty(String),
}

pub fn pool(
    m: &ActivationMatrix,
    strategy: PoolingStrategy,
) -> Result<PooledEmbedding, PoolingError> {
    let (t, d) = (m.tokens(), m.dim());
    if t == 0 || d == 0 {
        return Err(PoolingError::Empty(m.instance_name().to_owned()));
    }
    let vector = match strategy {
        PoolingStrategy::Mean => {
            // f64 accumulation: T can run past 1e5 tokens.
            let mut acc = vec![0.0f64; d];
            for row in m.iter_rows() {
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a += f64::from(x);
                }
            }
            acc.iter().map(|s| s / t as f64).collect()
        }
        PoolingStrategy::Max => {
            let mut acc = vec![f64::NEG_INFINITY; d];
            for row in m.iter_rows() {
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a = a.max(f64::from(x));
                }
            }
            acc
        }
        PoolingStrategy::Last => m.row(t - 1).iter().map(|&x| f64::from(x)).collect(),
    };
    Ok(PooledEmbedding {
        instance_name: m.instance_name().to_owned(),
        representation: m.representation(),
        strategy,
        vector,
    })
}
