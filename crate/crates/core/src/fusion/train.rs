//! Mini-batch training with decoupled-weight-decay adaptive moments.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::backprop::{loss, loss_and_grad};
use super::params::Params;
use super::{grouped_at, FusionMode, FusionModel, GroupSpec};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::features::ModalityId;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub d_model: usize,
    pub d_z: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub fusion: FusionMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            d_model: 256,
            d_z: 128,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            fusion: FusionMode::Attention,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(alloc::format!("invalid train config: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.d_model == 0 || self.d_z == 0 {
            return bad("d_model and d_z must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("moment coefficients must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

/// Record of how a model was produced.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub train_samples: usize,
    /// Mean loss before training followed by the running mean of each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
}

struct Adam {
    first: Params,
    second: Params,
    step: i32,
}

impl Adam {
    fn new(params: &Params) -> Self {
        Self {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Params, grads: &mut Params, config: &TrainConfig) {
        self.step += 1;
        let bc1 = 1.0 - libm::pow(config.beta1, f64::from(self.step));
        let bc2 = 1.0 - libm::pow(config.beta2, f64::from(self.step));
        let names: Vec<bool> = params
            .named_tensors()
            .iter()
            .map(|(n, _)| n.ends_with("weight") || n.starts_with("attn."))
            .collect();
        let tensors = params.tensors_mut();
        let g = grads.tensors_mut();
        let m = self.first.tensors_mut();
        let v = self.second.tensors_mut();
        for ((((p, g), m), v), decay) in tensors.into_iter().zip(g).zip(m).zip(v).zip(names) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * gi;
                v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * gi * gi;
                let m_hat = m.data[i] / bc1;
                let v_hat = v.data[i] / bc2;
                let mut step = m_hat / (libm::sqrt(v_hat) + config.epsilon);
                if decay {
                    step += config.weight_decay * p.data[i];
                }
                p.data[i] -= config.learning_rate * step;
            }
        }
    }
}

/// Trains on explicit `(inputs, label)` examples; inputs are in spec order.
pub fn train_examples(
    examples: &[(Vec<&[f64]>, usize)],
    spec: &GroupSpec,
    dims: &[usize],
    label_vocab: &[String],
    config: &TrainConfig,
) -> Result<FusionModel> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if dims.len() != spec.len() {
        return Err(Error::LengthMismatch {
            left: spec.len(),
            right: dims.len(),
        });
    }
    let classes = label_vocab.len();
    if classes == 0 {
        return Err(Error::Config("empty label vocabulary".into()));
    }
    for (inputs, label) in examples {
        if *label >= classes {
            return Err(Error::ClassOutOfRange { class: *label, classes });
        }
        if inputs.len() != dims.len() || inputs.iter().zip(dims).any(|(x, &d)| x.len() != d) {
            return Err(Error::Validation("training example does not match the group dims".into()));
        }
        if !inputs.iter().all(|x| x.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("training input".into()));
        }
    }

    let mut rng = Rng::seed(config.seed);
    let modalities: Vec<(ModalityId, usize)> = spec.modalities().iter().cloned().zip(dims.iter().copied()).collect();
    let width = match config.fusion {
        FusionMode::Attention => Some(config.d_model),
        FusionMode::Concat => None,
    };
    let mut params = Params::init(&mut rng, &modalities, width, config.d_z, classes);

    let n = examples.len();
    let initial = examples.iter().map(|(x, y)| loss(&params, x, *y)).sum::<f64>() / n as f64;
    if !initial.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    let mut epoch_losses = alloc::vec![initial];

    let mut adam = Adam::new(&params);
    let mut grads = params.zeros_like();
    for epoch in 1..=config.epochs {
        let order = rng.permutation(n);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            for &i in batch {
                let (x, y) = &examples[i];
                total += loss_and_grad(&params, x, *y, &mut grads);
            }
            let inv = 1.0 / batch.len() as f64;
            grads
                .tensors_mut()
                .into_iter()
                .for_each(|t| crate::linalg::scale(&mut t.data, inv));
            adam.update(&mut params, &mut grads, config);
        }
        let mean = total / n as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_losses.push(mean);
    }

    params.round_to_f32();
    let final_loss = *epoch_losses.last().unwrap_or(&initial);
    Ok(FusionModel {
        spec: spec.clone(),
        dims: dims.to_vec(),
        mode: config.fusion,
        label_vocab: label_vocab.to_vec(),
        params,
        meta: TrainingMeta {
            seed: config.seed,
            epochs: config.epochs,
            train_samples: n,
            epoch_losses,
            final_loss,
        },
    })
}

/// Collects the inputs of the given entries for `spec`, with labels.
pub(crate) fn examples_at<'d>(
    dataset: &'d Dataset,
    spec: &GroupSpec,
    labeled: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Vec<(Vec<&'d [f64]>, usize)>> {
    labeled
        .into_iter()
        .map(|(i, y)| grouped_at(dataset, i, spec).map(|x| (x, y)))
        .collect()
}

pub(crate) fn spec_dims(dataset: &Dataset, spec: &GroupSpec) -> Result<Vec<usize>> {
    spec.modalities()
        .iter()
        .map(|m| {
            dataset
                .modality_dim(m)
                .ok_or_else(|| Error::Unresolved(alloc::vec![(m.to_string(), "*".to_string())]))
        })
        .collect()
}

/// Trains one fusion branch on the dataset's labeled `train` split.
pub fn train(dataset: &Dataset, spec: &GroupSpec, config: &TrainConfig) -> Result<FusionModel> {
    let dims = spec_dims(dataset, spec)?;
    let labeled = dataset
        .split_indices(Split::Train)
        .into_iter()
        .filter_map(|i| dataset.entries()[i].label.map(|y| (i, y)));
    let examples = examples_at(dataset, spec, labeled)?;
    train_examples(&examples, spec, &dims, dataset.label_vocab(), config)
}
