//! Modality identifiers, per-sample embedding sequences and sequence pooling.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Lowercase identifier of one input channel, matching `[a-z_][a-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub struct ModalityId(String);

impl ModalityId {
    pub const AUDIO: &'static str = "audio";
    pub const TEXT: &'static str = "text";
    pub const VISION: &'static str = "vision";
    pub const JOINT_AT: &'static str = "joint_at";

    pub fn new(id: &str) -> Result<Self> {
        let mut chars = id.chars();
        let head_ok = matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_lowercase());
        let tail_ok = chars.all(|c| c == '_' || c.is_ascii_lowercase() || c.is_ascii_digit());
        if head_ok && tail_ok {
            Ok(Self(id.to_string()))
        } else {
            Err(Error::InvalidModality(id.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Embedding width of the canonical encoders, if this is a canonical id.
    pub fn default_dim(&self) -> Option<usize> {
        match self.0.as_str() {
            Self::AUDIO => Some(1024),
            Self::TEXT => Some(5120),
            Self::VISION => Some(768),
            Self::JOINT_AT => Some(4096),
            _ => None,
        }
    }

    pub fn canonical() -> [ModalityId; 4] {
        [Self::AUDIO, Self::TEXT, Self::VISION, Self::JOINT_AT].map(|s| Self(s.to_string()))
    }
}

impl fmt::Display for ModalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ModalityId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Self::new(&value)
    }
}

impl From<ModalityId> for String {
    fn from(value: ModalityId) -> Self {
        value.0
    }
}

impl core::str::FromStr for ModalityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

/// One sample's embedding sequence: `row_count × dim` floats, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub sample_id: String,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl FeatureRecord {
    pub fn new(sample_id: impl Into<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        let sample_id = sample_id.into();
        if sample_id.is_empty() {
            return Err(Error::Validation("empty sample id".into()));
        }
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: data.len(),
                context: alloc::format!("payload of {sample_id:?} is not a non-empty multiple of dim"),
            });
        }
        Ok(Self { sample_id, dim, data })
    }

    pub fn from_rows(sample_id: impl Into<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("ragged rows".into()));
        }
        Self::new(sample_id, dim, rows.concat())
    }

    pub fn row_count(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Bitwise equality of ids, shape and every float payload word.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.sample_id == other.sample_id
            && self.dim == other.dim
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Reduction from a frame/token sequence to one fixed vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Pooling {
    #[default]
    Mean,
    Max,
}

/// Pools `rows` (each of length `dim`) column-wise. Arithmetic is in `f64`.
pub fn pool_sequence<R: AsRef<[f64]>>(rows: &[R], method: Pooling) -> Result<Vec<f64>> {
    let first = rows.first().ok_or(Error::EmptySequence)?.as_ref();
    let dim = first.len();
    if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: bad.as_ref().len(),
            context: "pooling rows".into(),
        });
    }
    match method {
        Pooling::Mean => {
            let mut acc = vec![0.0; dim];
            for row in rows {
                crate::linalg::add_assign(&mut acc, row.as_ref());
            }
            let n = rows.len() as f64;
            acc.iter_mut().for_each(|v| *v /= n);
            Ok(acc)
        }
        Pooling::Max => {
            let mut acc = first.to_vec();
            for row in &rows[1..] {
                for (a, &v) in acc.iter_mut().zip(row.as_ref()) {
                    if v > *a {
                        *a = v;
                    }
                }
            }
            Ok(acc)
        }
    }
}

/// Pools a stored record, widening its floats to `f64`.
pub fn pool_record(record: &FeatureRecord, method: Pooling) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = record
        .rows()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    pool_sequence(&rows, method)
}
