//! Hidden-state matrices and their on-disk cache.
//!
//! File layout (`.copa`, all integers little-endian):
//!
//! ```text
//! offset 0   4 bytes   magic "COPA"
//! offset 4   u16       format version (1)
//! offset 6   u32       header length H in bytes
//! offset 10  H bytes   UTF-8 JSON {"instance","representation","tokens","dim","checksum"}
//! offset 10+H          tokens*dim f32 values, row-major
//! ```
//!
//! `checksum` is the CRC-32 (IEEE) of the payload bytes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instances::ProblemKind;
use crate::render::Representation;

pub const MAGIC: &[u8; 4] = b"COPA";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ActivationError {
    #[error("activation data has {found} values, expected {tokens}x{dim}")]
    Shape {
        tokens: usize,
        dim: usize,
        found: usize,
    },
    #[error("non-finite activation at token {token}, dimension {dim}")]
    NonFinite { token: usize, dim: usize },
    #[error("activation dimension {found} does not match the run dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("activation matrix for `{0}` has no token rows")]
    NoTokens(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("truncated file: {0}")]
    Truncated(&'static str),
    #[error("header declares {declared} payload bytes, file holds {found}")]
    PayloadLength { declared: usize, found: usize },
    #[error("checksum mismatch: header {expected:08x}, payload {found:08x}")]
    Checksum { expected: u32, found: u32 },
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("no offline activation file at {0}")]
    MissingOffline(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Last-hidden-layer activations of one rendering: one row per input token,
/// end-of-sequence row last.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    instance_name: String,
    representation: Representation,
    tokens: usize,
    dim: usize,
    data: Vec<f32>,
}

impl ActivationMatrix {
    pub fn new(
        instance_name: impl Into<String>,
        representation: Representation,
        tokens: usize,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self, ActivationError> {
        if data.len() != tokens * dim {
            return Err(ActivationError::Shape {
                tokens,
                dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(ActivationError::NonFinite {
                token: pos / dim.max(1),
                dim: pos % dim.max(1),
            });
        }
        Ok(ActivationMatrix {
            instance_name: instance_name.into(),
            representation,
            tokens,
            dim,
            data,
        })
    }

    pub fn instance_name(&self) -> &str {
        &self.instance_name
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.tokens)
    }

    /// Checks the run-level contract: at least one token and the configured width.
    pub fn check(&self, expected_dim: Option<usize>) -> Result<(), ActivationError> {
        if self.tokens == 0 {
            return Err(ActivationError::NoTokens(self.instance_name.clone()));
        }
        if let Some(expected) = expected_dim {
            if expected != self.dim {
                return Err(ActivationError::DimensionMismatch {
                    expected,
                    found: self.dim,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FileHeader {
    instance: String,
    representation: Representation,
    tokens: usize,
    dim: usize,
    checksum: u32,
}

pub fn encode(m: &ActivationMatrix) -> Vec<u8> {
    let mut payload = Vec::with_capacity(m.data.len() * 4);
    for x in &m.data {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    let header = FileHeader {
        instance: m.instance_name.clone(),
        representation: m.representation,
        tokens: m.tokens,
        dim: m.dim,
        checksum: crc32fast::hash(&payload),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(10 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

pub fn decode(bytes: &[u8]) -> Result<ActivationMatrix, ActivationError> {
    if bytes.len() < 10 {
        return Err(ActivationError::Truncated("preamble"));
    }
    if &bytes[..4] != MAGIC {
        return Err(ActivationError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(ActivationError::Version(version));
    }
    let header_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let body = &bytes[10..];
    if body.len() < header_len {
        return Err(ActivationError::Truncated("header"));
    }
    let header: FileHeader = serde_json::from_slice(&body[..header_len])?;
    let payload = &body[header_len..];
    let declared = header
        .tokens
        .checked_mul(header.dim)
        .and_then(|n| n.checked_mul(4))
        .unwrap_or(usize::MAX);
    if payload.len() != declared {
        return Err(ActivationError::PayloadLength {
            declared,
            found: payload.len(),
        });
    }
    let found = crc32fast::hash(payload);
    if found != header.checksum {
        return Err(ActivationError::Checksum {
            expected: header.checksum,
            found,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ActivationMatrix::new(
        header.instance,
        header.representation,
        header.tokens,
        header.dim,
        data,
    )
}

/// Writes through a temporary sibling and renames, so concurrent readers
/// never observe a partial file.
pub fn activation_cache_store(path: &Path, m: &ActivationMatrix) -> Result<(), ActivationError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("copa.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(m))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn activation_cache_load(path: &Path) -> Result<ActivationMatrix, ActivationError> {
    match fs::read(path) {
        Ok(bytes) => decode(&bytes),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            Err(ActivationError::MissingOffline(path.to_owned()))
        }
        Err(e) => Err(e.into()),
    }
}

/// `<root>/<problem>/<representation>/<instance>.copa`
pub fn activation_path(
    root: &Path,
    problem: ProblemKind,
    representation: Representation,
    instance: &str,
) -> PathBuf {
    root.join(problem.code())
        .join(representation.as_str())
        .join(format!("{instance}.copa"))
}
