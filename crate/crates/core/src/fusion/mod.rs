//! Attention-based late fusion over modality feature groups.
//!
//! A [`GroupSpec`] picks an ordered subset of modalities. Each selected pooled
//! vector becomes one token; tokens are projected to a shared width, mixed by
//! scaled dot-product self-attention and mean-reduced to one fused vector
//! (or, in [`FusionMode::Concat`], simply concatenated). The fused vector goes
//! through an affine layer `z = fused·W_z + b_z` and a softmax classifier
//! `p = softmax(z·W_smax + b_smax)`; the prediction is `argmax p` with the
//! lowest class index winning ties.

mod backprop;
mod codec;
mod gradcheck;
mod params;
pub(crate) mod train;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub use backprop::{attention_fuse, forward, loss, loss_and_grad};
pub use codec::{decode_model, encode_model, MODEL_MAGIC, MODEL_VERSION};
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport};
pub use params::{AttentionParams, FusionHead, Params, Projection};
pub use train::{train, train_examples, TrainConfig, TrainingMeta};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::ModalityId;
use crate::linalg;

/// Ordered, duplicate-free list of modalities forming one fusion branch.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<ModalityId>", into = "Vec<ModalityId>"))]
pub struct GroupSpec(Vec<ModalityId>);

impl GroupSpec {
    pub fn new(modalities: Vec<ModalityId>) -> Result<Self> {
        if modalities.is_empty() {
            return Err(Error::Config("group spec needs at least one modality".into()));
        }
        for (i, m) in modalities.iter().enumerate() {
            if modalities[..i].contains(m) {
                return Err(Error::Config(alloc::format!("modality {m} repeated in group spec")));
            }
        }
        Ok(Self(modalities))
    }

    /// Parses `"audio,text,vision"` or `"audio+text+vision"`.
    pub fn parse(s: &str) -> Result<Self> {
        let ids = s
            .split([',', '+'])
            .map(|p| ModalityId::new(p.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ids)
    }

    pub fn modalities(&self) -> &[ModalityId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<ModalityId>> for GroupSpec {
    type Error = Error;
    fn try_from(value: Vec<ModalityId>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<GroupSpec> for Vec<ModalityId> {
    fn from(value: GroupSpec) -> Self {
        value.0
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(m.as_str())?;
        }
        Ok(())
    }
}

/// How modality tokens are combined before the classifier head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FusionMode {
    /// Projected tokens mixed by self-attention, then mean-reduced.
    #[default]
    Attention,
    /// Flat concatenation fed straight into the head.
    Concat,
}

impl FusionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Attention => "attention",
            FusionMode::Concat => "concat",
        }
    }
}

impl core::str::FromStr for FusionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attention" => Ok(Self::Attention),
            "concat" => Ok(Self::Concat),
            other => Err(Error::Config(alloc::format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub label: usize,
}

impl Prediction {
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let label = linalg::argmax(&probs);
        Self { probs, label }
    }
}

/// The modality vectors of one sample, tagged and in spec order.
pub fn group_features(
    dataset: &Dataset,
    sample_id: &str,
    spec: &GroupSpec,
) -> Result<Vec<(ModalityId, Vec<f64>)>> {
    let index = dataset
        .index_of(sample_id)
        .ok_or_else(|| Error::Unresolved(alloc::vec![("manifest".to_string(), sample_id.to_string())]))?;
    grouped_at(dataset, index, spec)
        .map(|views| {
            spec.modalities()
                .iter()
                .cloned()
                .zip(views.into_iter().map(<[f64]>::to_vec))
                .collect()
        })
}

/// Borrowed modality vectors of the entry at `index`, in spec order.
pub fn grouped_at<'d>(dataset: &'d Dataset, index: usize, spec: &GroupSpec) -> Result<Vec<&'d [f64]>> {
    spec.modalities()
        .iter()
        .map(|m| {
            dataset.vector(m, index).ok_or_else(|| {
                let id = dataset
                    .entries()
                    .get(index)
                    .map_or_else(String::new, |e| e.sample_id.clone());
                Error::Unresolved(alloc::vec![(m.to_string(), id)])
            })
        })
        .collect()
}

/// Flat `⊕` concatenation of grouped vectors.
pub fn concat(tokens: &[(ModalityId, Vec<f64>)]) -> Vec<f64> {
    tokens.iter().flat_map(|(_, v)| v.iter().copied()).collect()
}

/// One trained fusion branch.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub spec: GroupSpec,
    pub dims: Vec<usize>,
    pub mode: FusionMode,
    pub label_vocab: Vec<String>,
    pub params: Params,
    pub meta: TrainingMeta,
}

impl FusionModel {
    pub fn num_classes(&self) -> usize {
        self.label_vocab.len()
    }

    /// Predicts from modality vectors given in spec order.
    pub fn predict_inputs(&self, inputs: &[&[f64]]) -> Result<Prediction> {
        self.check_inputs(inputs)?;
        let fused = self.fuse(inputs)?;
        forward(&fused, &self.params.head)
    }

    pub fn predict_index(&self, dataset: &Dataset, index: usize) -> Result<Prediction> {
        self.predict_inputs(&grouped_at(dataset, index, &self.spec)?)
    }

    pub fn predict(&self, dataset: &Dataset, sample_id: &str) -> Result<Prediction> {
        let index = dataset
            .index_of(sample_id)
            .ok_or_else(|| Error::Unresolved(alloc::vec![("manifest".to_string(), sample_id.to_string())]))?;
        self.predict_index(dataset, index)
    }

    /// Predicted labels for the given entry indices.
    pub fn predict_labels(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
        self.check_dataset(dataset)?;
        indices
            .iter()
            .map(|&i| self.predict_index(dataset, i).map(|p| p.label))
            .collect()
    }

    /// Verifies that `dataset` carries this model's modalities, dims and vocab.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.label_vocab() != self.label_vocab.as_slice() {
            return Err(Error::Config(alloc::format!(
                "label vocabulary mismatch between model {} and dataset",
                self.spec
            )));
        }
        for (m, &dim) in self.spec.modalities().iter().zip(&self.dims) {
            match dataset.modality_dim(m) {
                Some(d) if d == dim => {}
                Some(d) => {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        found: d,
                        context: alloc::format!("modality {m}"),
                    })
                }
                None => return Err(Error::Unresolved(alloc::vec![(m.to_string(), "*".to_string())])),
            }
        }
        Ok(())
    }

    fn check_inputs(&self, inputs: &[&[f64]]) -> Result<()> {
        if inputs.len() != self.dims.len() {
            return Err(Error::LengthMismatch {
                left: self.dims.len(),
                right: inputs.len(),
            });
        }
        for ((x, &dim), m) in inputs.iter().zip(&self.dims).zip(self.spec.modalities()) {
            if x.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: x.len(),
                    context: alloc::format!("modality {m}"),
                });
            }
        }
        Ok(())
    }

    fn fuse(&self, inputs: &[&[f64]]) -> Result<Vec<f64>> {
        match &self.params.attention {
            Some(att) => {
                let tokens: Vec<(ModalityId, &[f64])> = self
                    .spec
                    .modalities()
                    .iter()
                    .cloned()
                    .zip(inputs.iter().copied())
                    .collect();
                attention_fuse(&tokens, att)
            }
            None => Ok(inputs.concat()),
        }
    }
}
