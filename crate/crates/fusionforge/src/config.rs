//! JSON run configuration.
//!
//! ```json
//! {
//!   "manifest": "manifest.csv",
//!   "modalities": [{ "id": "audio", "dim": 32, "file": "audio.mmf" }],
//!   "label_vocab": "mer6",
//!   "pooling": "mean",
//!   "group_specs": [["audio", "text", "vision"]],
//!   "train": { "epochs": 60, "d_model": 32, "d_z": 32, "weight_decay": 0.1 },
//!   "mining": { "iterations": 3 },
//!   "ensemble": { "rank_split": "val" },
//!   "seed": 7
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! `label_vocab` is a preset name (`mer6`, `mer8`) or an explicit list.

use std::path::{Path, PathBuf};

use fusionforge_core::dataset::label_preset;
use fusionforge_core::mining::{default_group_specs, MiningConfig};
use fusionforge_core::{Dataset, GroupSpec, ModalityId, ModalitySpec, Pooling, Split, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityDecl {
    pub id: ModalityId,
    pub dim: usize,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelVocab {
    Preset(String),
    Labels(Vec<String>),
}

impl Default for LabelVocab {
    fn default() -> Self {
        LabelVocab::Preset("mer6".into())
    }
}

impl LabelVocab {
    pub fn resolve(&self) -> Result<Vec<String>> {
        match self {
            LabelVocab::Preset(name) => {
                label_preset(name).ok_or_else(|| Error::Usage(format!("unknown label preset {name:?}")))
            }
            LabelVocab::Labels(labels) => {
                if labels.is_empty() {
                    return Err(Error::Usage("label_vocab is empty".into()));
                }
                Ok(labels.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Split whose WAF ranks the models.
    pub rank_split: Split,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { rank_split: Split::Val }
    }
}

fn default_specs() -> Vec<GroupSpec> {
    default_group_specs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub modalities: Vec<ModalityDecl>,
    #[serde(default)]
    pub label_vocab: LabelVocab,
    #[serde(default)]
    pub pooling: Pooling,
    #[serde(default = "default_specs")]
    pub group_specs: Vec<GroupSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    /// Overrides `train.seed` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Optional sealed-label file for scoring unlabeled splits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<PathBuf>,
}

impl RunConfig {
    /// Parses, resolves relative paths and validates references.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RunConfig = io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.manifest = base.join(&config.manifest);
        for m in &mut config.modalities {
            m.file = base.join(&m.file);
        }
        if let Some(a) = &mut config.answers {
            *a = base.join(&*a);
        }
        if let Some(seed) = config.seed {
            config.train.seed = seed;
        }
        config.validate().map_err(|e| match e {
            Error::Usage(m) => Error::file(path, m),
            other => other,
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.label_vocab.resolve()?;
        self.train.validate()?;
        if self.modalities.is_empty() {
            return Err(Error::Usage("no modalities declared".into()));
        }
        for (i, m) in self.modalities.iter().enumerate() {
            if self.modalities[..i].iter().any(|o| o.id == m.id) {
                return Err(Error::Usage(format!("modality {} declared twice", m.id)));
            }
            if m.dim == 0 {
                return Err(Error::Usage(format!("modality {} has dim 0", m.id)));
            }
        }
        for spec in &self.group_specs {
            for m in spec.modalities() {
                if !self.modalities.iter().any(|d| &d.id == m) {
                    return Err(Error::Usage(format!("group spec {spec} uses undeclared modality {m}")));
                }
            }
        }
        for path in std::iter::once(&self.manifest)
            .chain(self.modalities.iter().map(|m| &m.file))
            .chain(self.answers.iter())
        {
            if !path.exists() {
                return Err(Error::file(path, "referenced file does not exist"));
            }
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.train.seed = seed;
    }

    pub fn vocab(&self) -> Result<Vec<String>> {
        self.label_vocab.resolve()
    }

    /// Loads the manifest and every declared modality.
    pub fn dataset(&self) -> Result<Dataset> {
        let files: Vec<(ModalitySpec, PathBuf)> = self
            .modalities
            .iter()
            .map(|m| {
                (
                    ModalitySpec {
                        id: m.id.clone(),
                        dim: m.dim,
                    },
                    m.file.clone(),
                )
            })
            .collect();
        io::load_dataset(&self.manifest, &files, &self.vocab()?, self.pooling)
    }

    /// Dataset with sealed answers merged in, when an answer file is configured.
    pub fn dataset_with_answers(&self, answers: Option<&Path>) -> Result<Dataset> {
        let ds = self.dataset()?;
        match answers.or(self.answers.as_deref()) {
            Some(path) => Ok(ds.with_labels(&io::read_answers(path, ds.label_vocab())?)?),
            None => Ok(ds),
        }
    }
}
