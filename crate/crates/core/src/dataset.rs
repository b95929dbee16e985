//! Labeled, split, pooled multimodal datasets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::features::{pool_record, FeatureRecord, ModalityId, Pooling};

/// Six-class MER label set.
pub const MER6_LABELS: [&str; 6] = ["neutral", "angry", "happy", "sad", "worried", "surprise"];

/// Eight-class vocabulary used for encoder fine-tuning.
pub const MER8_LABELS: [&str; 8] = [
    "angry", "disgust", "fear", "happy", "sad", "surprise", "neutral", "worried",
];

/// Resolves a named label preset.
pub fn label_preset(name: &str) -> Option<Vec<String>> {
    let labels: &[&str] = match name {
        "mer6" => &MER6_LABELS,
        "mer8" => &MER8_LABELS,
        _ => return None,
    };
    Some(labels.iter().map(|s| s.to_string()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Unlabeled,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Unlabeled => "unlabeled",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "unlabeled" => Ok(Split::Unlabeled),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(alloc::format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub split: Split,
    pub label: Option<usize>,
}

impl ManifestEntry {
    pub fn validate(&self) -> Result<()> {
        if self.sample_id.is_empty() {
            return Err(Error::Validation("empty sample id in manifest".into()));
        }
        match (self.split, self.label) {
            (Split::Train, None) => Err(Error::Validation(alloc::format!(
                "train sample {:?} has no label",
                self.sample_id
            ))),
            (Split::Unlabeled, Some(_)) => Err(Error::Validation(alloc::format!(
                "unlabeled sample {:?} carries a label",
                self.sample_id
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModalitySpec {
    pub id: ModalityId,
    pub dim: usize,
}

/// Immutable dataset: manifest entries sorted by sample id, one pooled vector
/// per declared modality per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    label_vocab: Vec<String>,
    modalities: Vec<ModalitySpec>,
    entries: Vec<ManifestEntry>,
    index: BTreeMap<String, usize>,
    pooled: BTreeMap<ModalityId, Vec<Vec<f64>>>,
}

impl Dataset {
    /// Pools every declared modality's records and joins them to the manifest.
    ///
    /// Records whose ids are not in the manifest are ignored. Every manifest id
    /// must resolve in every declared modality.
    pub fn assemble(
        label_vocab: Vec<String>,
        modalities: Vec<(ModalitySpec, Vec<FeatureRecord>)>,
        entries: Vec<ManifestEntry>,
        pooling: Pooling,
    ) -> Result<Self> {
        let mut pooled_by_id = Vec::with_capacity(modalities.len());
        let mut specs = Vec::with_capacity(modalities.len());
        for (spec, records) in modalities {
            let mut map = BTreeMap::new();
            for rec in &records {
                if rec.dim != spec.dim {
                    return Err(Error::DimMismatch {
                        expected: spec.dim,
                        found: rec.dim,
                        context: alloc::format!("modality {}", spec.id),
                    });
                }
                map.insert(rec.sample_id.as_str(), rec);
            }
            let mut vectors = BTreeMap::new();
            for e in &entries {
                if let Some(rec) = map.get(e.sample_id.as_str()) {
                    vectors.insert(e.sample_id.clone(), pool_record(rec, pooling)?);
                }
            }
            pooled_by_id.push(vectors);
            specs.push(spec);
        }
        Self::from_pooled(label_vocab, specs, entries, pooled_by_id)
    }

    /// Builds a dataset from already pooled vectors, aligned with `modalities`.
    pub fn from_pooled(
        label_vocab: Vec<String>,
        modalities: Vec<ModalitySpec>,
        mut entries: Vec<ManifestEntry>,
        mut vectors: Vec<BTreeMap<String, Vec<f64>>>,
    ) -> Result<Self> {
        if vectors.len() != modalities.len() {
            return Err(Error::LengthMismatch {
                left: modalities.len(),
                right: vectors.len(),
            });
        }
        let mut declared = BTreeSet::new();
        for m in &modalities {
            if m.dim == 0 {
                return Err(Error::Validation(alloc::format!("modality {} has dim 0", m.id)));
            }
            if !declared.insert(m.id.clone()) {
                return Err(Error::Validation(alloc::format!("modality {} declared twice", m.id)));
            }
        }
        entries.sort();
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            e.validate()?;
            if let Some(label) = e.label {
                if label >= label_vocab.len() {
                    return Err(Error::ClassOutOfRange {
                        class: label,
                        classes: label_vocab.len(),
                    });
                }
            }
            if index.insert(e.sample_id.clone(), i).is_some() {
                return Err(Error::DuplicateId(e.sample_id.clone()));
            }
        }

        let mut missing = Vec::new();
        let mut pooled = BTreeMap::new();
        for (spec, map) in modalities.iter().zip(vectors.iter_mut()) {
            let mut aligned = Vec::with_capacity(entries.len());
            for e in &entries {
                match map.remove(&e.sample_id) {
                    Some(v) if v.len() == spec.dim => aligned.push(v),
                    Some(v) => {
                        return Err(Error::DimMismatch {
                            expected: spec.dim,
                            found: v.len(),
                            context: alloc::format!("{} vector of {:?}", spec.id, e.sample_id),
                        })
                    }
                    None => missing.push((spec.id.to_string(), e.sample_id.clone())),
                }
            }
            pooled.insert(spec.id.clone(), aligned);
        }
        if !missing.is_empty() {
            return Err(Error::Unresolved(missing));
        }
        Ok(Self {
            label_vocab,
            modalities,
            entries,
            index,
            pooled,
        })
    }

    pub fn label_vocab(&self) -> &[String] {
        &self.label_vocab
    }

    pub fn num_classes(&self) -> usize {
        self.label_vocab.len()
    }

    pub fn modalities(&self) -> &[ModalitySpec] {
        &self.modalities
    }

    pub fn modality_dim(&self, id: &ModalityId) -> Option<usize> {
        self.modalities.iter().find(|m| &m.id == id).map(|m| m.dim)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, sample_id: &str) -> Option<usize> {
        self.index.get(sample_id).copied()
    }

    /// Entry indices of one split, in sample-id order.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].split == split)
            .collect()
    }

    pub fn vector(&self, modality: &ModalityId, index: usize) -> Option<&[f64]> {
        self.pooled.get(modality).and_then(|v| v.get(index)).map(Vec::as_slice)
    }

    pub fn label_index(&self, name: &str) -> Result<usize> {
        self.label_vocab
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Copy with labels replaced for the given sample ids (e.g. sealed answers).
    pub fn with_labels(&self, labels: &BTreeMap<String, usize>) -> Result<Self> {
        let mut out = self.clone();
        for (id, &label) in labels {
            if label >= self.label_vocab.len() {
                return Err(Error::ClassOutOfRange {
                    class: label,
                    classes: self.label_vocab.len(),
                });
            }
            if let Some(&i) = self.index.get(id) {
                if out.entries[i].split != Split::Unlabeled {
                    out.entries[i].label = Some(label);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(id: &str, dim: usize) -> ModalitySpec {
        ModalitySpec {
            id: ModalityId::new(id).unwrap(),
            dim,
        }
    }

    fn rec(id: &str, dim: usize, v: f32) -> FeatureRecord {
        FeatureRecord::new(id, dim, vec![v; dim * 2]).unwrap()
    }

    fn entry(id: &str, split: Split, label: Option<usize>) -> ManifestEntry {
        ManifestEntry {
            sample_id: id.into(),
            split,
            label,
        }
    }

    fn vocab() -> Vec<String> {
        vec!["happy".into(), "sad".into()]
    }

    #[test]
    fn three_samples_two_modalities() {
        let ids = ["a", "b", "c"];
        let ds = Dataset::assemble(
            vocab(),
            vec![
                (spec("audio", 2), ids.iter().map(|i| rec(i, 2, 1.0)).collect()),
                (spec("vision", 3), ids.iter().map(|i| rec(i, 3, 2.0)).collect()),
            ],
            vec![
                entry("a", Split::Train, Some(0)),
                entry("b", Split::Train, Some(1)),
                entry("c", Split::Unlabeled, None),
            ],
            Pooling::Mean,
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        let vision = ModalityId::new("vision").unwrap();
        assert_eq!(ds.vector(&vision, 2).unwrap(), &[2.0, 2.0, 2.0]);
        assert_eq!(ds.label_index("sad").unwrap(), 1);
        assert_eq!(ds.label_index("angry"), Err(Error::UnknownLabel("angry".into())));
    }

    #[test]
    fn missing_modality_sample_is_named() {
        let err = Dataset::assemble(
            vocab(),
            vec![
                (spec("audio", 1), vec![rec("a", 1, 0.0), rec("b", 1, 0.0)]),
                (spec("vision", 1), vec![rec("a", 1, 0.0)]),
            ],
            vec![entry("a", Split::Val, None), entry("b", Split::Val, None)],
            Pooling::Mean,
        )
        .unwrap_err();
        assert_eq!(err, Error::Unresolved(vec![("vision".into(), "b".into())]));
    }

    #[test]
    fn manifest_split_label_rules() {
        assert!(entry("a", Split::Train, None).validate().is_err());
        assert!(entry("a", Split::Unlabeled, Some(0)).validate().is_err());
        assert!(entry("a", Split::Test, None).validate().is_ok());
    }

    #[test]
    fn extra_records_are_ignored_and_order_does_not_matter() {
        let build = |entries: Vec<ManifestEntry>| {
            Dataset::assemble(
                vocab(),
                vec![(spec("text", 1), vec![rec("x", 1, 1.0), rec("y", 1, 2.0), rec("zz", 1, 3.0)])],
                entries,
                Pooling::Mean,
            )
            .unwrap()
        };
        let a = build(vec![entry("x", Split::Train, Some(0)), entry("y", Split::Val, Some(1))]);
        let b = build(vec![entry("y", Split::Val, Some(1)), entry("x", Split::Train, Some(0))]);
        assert_eq!(a, b);
    }

    #[test]
    fn presets() {
        assert_eq!(label_preset("mer8").unwrap().len(), 8);
        assert_eq!(label_preset("mer6").unwrap().len(), 6);
        assert!(label_preset("nope").is_none());
    }
}
