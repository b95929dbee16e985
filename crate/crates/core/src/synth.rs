//! Deterministic synthetic multimodal Gaussian-mixture data.
//!
//! Every class owns one mean per modality; means of different classes sit on
//! distinct signed coordinate axes scaled so that any two are exactly
//! `separation` apart. A sample of class `y` draws, per modality, a centre
//! `μ[y] + noise·N(0, I)` and then a sequence of 3 to 10 rows scattered around
//! that centre with zero-mean jitter, so mean pooling recovers the centre.
//! With probability `conflict_rate` one modality is drawn from a different,
//! uniformly chosen class instead.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{label_preset, Dataset, ManifestEntry, ModalitySpec, Split};
use crate::error::{Error, Result};
use crate::features::{FeatureRecord, ModalityId, Pooling};
use crate::rng::{Rng, DEFAULT_RNG};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub classes: usize,
    pub modalities: Vec<ModalitySpec>,
    /// Distance between the means of any two classes within a modality.
    pub separation: f64,
    /// Standard deviation of the per-sample centre around its class mean.
    pub noise: f64,
    pub conflict_rate: f64,
    /// Probability that an observed train label is replaced by a wrong class.
    pub label_noise: f64,
    pub labeled: usize,
    pub unlabeled: usize,
    pub val: usize,
    pub test: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    pub seed: u64,
    pub rng: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 6,
            modalities: ModalityId::canonical()
                .into_iter()
                .map(|id| ModalitySpec { id, dim: 32 })
                .collect(),
            separation: 4.0,
            noise: 1.5,
            conflict_rate: 0.15,
            label_noise: 0.0,
            labeled: 200,
            unlabeled: 2000,
            val: 300,
            test: 300,
            min_rows: 3,
            max_rows: 10,
            seed: 0,
            rng: DEFAULT_RNG.to_string(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.rng != DEFAULT_RNG {
            return err(alloc::format!("unsupported rng {:?} (available: {DEFAULT_RNG})", self.rng));
        }
        if self.classes < 2 {
            return err("need at least two classes".into());
        }
        if self.modalities.is_empty() {
            return err("need at least one modality".into());
        }
        for m in &self.modalities {
            if m.dim == 0 {
                return err(alloc::format!("modality {} has dim 0", m.id));
            }
            if m.dim < self.classes {
                return err(alloc::format!(
                    "modality {} has dim {} but {} classes need {} orthogonal mean directions",
                    m.id,
                    m.dim,
                    self.classes,
                    self.classes
                ));
            }
        }
        for (name, rate) in [("conflict_rate", self.conflict_rate), ("label_noise", self.label_noise)] {
            if !(0.0..=1.0).contains(&rate) {
                return err(alloc::format!("{name} {rate} outside [0, 1]"));
            }
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return err("separation must be positive".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return err("noise must be non-negative".into());
        }
        if self.min_rows == 0 || self.min_rows > self.max_rows {
            return err("row range must satisfy 1 <= min_rows <= max_rows".into());
        }
        Ok(())
    }

    pub fn label_vocab(&self) -> Vec<String> {
        match self.classes {
            6 => label_preset("mer6"),
            8 => label_preset("mer8"),
            _ => None,
        }
        .unwrap_or_else(|| (0..self.classes).map(|k| alloc::format!("class{k}")).collect())
    }
}

/// Ground truth for one generated sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub sample_id: String,
    pub split: Split,
    pub label: usize,
    /// Modality index whose features came from another class, and that class.
    pub conflict: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub label_vocab: Vec<String>,
    pub modalities: Vec<ModalitySpec>,
    pub records: Vec<Vec<FeatureRecord>>,
    pub manifest: Vec<ManifestEntry>,
    pub answers: Vec<Answer>,
}

impl SynthOutput {
    pub fn dataset(&self, pooling: Pooling) -> Result<Dataset> {
        Dataset::assemble(
            self.label_vocab.clone(),
            self.modalities.iter().cloned().zip(self.records.iter().cloned()).collect(),
            self.manifest.clone(),
            pooling,
        )
    }

    /// Sealed labels keyed by sample id.
    pub fn answer_map(&self) -> BTreeMap<String, usize> {
        self.answers.iter().map(|a| (a.sample_id.clone(), a.label)).collect()
    }

    pub fn conflict_fraction(&self) -> f64 {
        if self.answers.is_empty() {
            return 0.0;
        }
        self.answers.iter().filter(|a| a.conflict.is_some()).count() as f64 / self.answers.len() as f64
    }
}

/// Class means per modality: `means[m][k]` has length `dim_m`.
fn class_means(config: &SynthConfig, rng: &mut Rng) -> Vec<Vec<Vec<f64>>> {
    let scale = config.separation / core::f64::consts::SQRT_2;
    config
        .modalities
        .iter()
        .map(|m| {
            let axes = rng.permutation(m.dim);
            (0..config.classes)
                .map(|k| {
                    let mut mu = vec![0.0; m.dim];
                    let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
                    mu[axes[k]] = sign * scale;
                    mu
                })
                .collect()
        })
        .collect()
}

fn other_class(rng: &mut Rng, classes: usize, not: usize) -> usize {
    let k = rng.below(classes - 1);
    if k >= not {
        k + 1
    } else {
        k
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = Rng::seed(config.seed);
    let means = class_means(config, &mut rng);
    let total = config.labeled + config.unlabeled + config.val + config.test;
    let width = total.max(1).to_string().len().max(5);

    let pools = [
        (Split::Train, config.labeled),
        (Split::Unlabeled, config.unlabeled),
        (Split::Val, config.val),
        (Split::Test, config.test),
    ];
    let mut records: Vec<Vec<FeatureRecord>> = vec![Vec::with_capacity(total); config.modalities.len()];
    let mut manifest = Vec::with_capacity(total);
    let mut answers = Vec::with_capacity(total);
    let mut next_id = 0usize;

    for (split, count) in pools {
        // Balanced classes, shuffled within the pool.
        let mut labels: Vec<usize> = (0..count).map(|i| i % config.classes).collect();
        rng.shuffle(&mut labels);
        for label in labels {
            let sample_id = alloc::format!("s{next_id:0width$}");
            next_id += 1;

            let conflict = rng.bernoulli(config.conflict_rate).then(|| {
                let m = rng.below(config.modalities.len());
                (m, other_class(&mut rng, config.classes, label))
            });

            for (m, spec) in config.modalities.iter().enumerate() {
                let class = match conflict {
                    Some((cm, cls)) if cm == m => cls,
                    _ => label,
                };
                let centre: Vec<f64> = means[m][class]
                    .iter()
                    .map(|mu| mu + config.noise * rng.gaussian())
                    .collect();
                let rows = rng.int_inclusive(config.min_rows, config.max_rows);
                let mut jitter: Vec<f64> = (0..rows * spec.dim).map(|_| config.noise * rng.gaussian()).collect();
                for c in 0..spec.dim {
                    let mean = (0..rows).map(|r| jitter[r * spec.dim + c]).sum::<f64>() / rows as f64;
                    for r in 0..rows {
                        jitter[r * spec.dim + c] -= mean;
                    }
                }
                let data = (0..rows * spec.dim)
                    .map(|i| (centre[i % spec.dim] + jitter[i]) as f32)
                    .collect();
                records[m].push(FeatureRecord::new(sample_id.clone(), spec.dim, data)?);
            }

            let observed = match split {
                Split::Train => Some(if rng.bernoulli(config.label_noise) {
                    other_class(&mut rng, config.classes, label)
                } else {
                    label
                }),
                Split::Val => Some(label),
                Split::Unlabeled | Split::Test => None,
            };
            manifest.push(ManifestEntry {
                sample_id: sample_id.clone(),
                split,
                label: observed,
            });
            answers.push(Answer {
                sample_id,
                split,
                label,
                conflict,
            });
        }
    }

    Ok(SynthOutput {
        label_vocab: config.label_vocab(),
        modalities: config.modalities.clone(),
        records,
        manifest,
        answers,
    })
}
