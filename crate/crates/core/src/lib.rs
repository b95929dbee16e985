//! Feature-level multimodal emotion recognition.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic piece
//! of the pipeline: the feature-file codec, pooled datasets, attention-based
//! late fusion with a hand-derived backward pass, weighted-F1 scoring, ranked
//! mode voting, the four-learner pseudo-label miner, transcript-similarity
//! source selection and a deterministic synthetic data generator.
//!
//! File and process IO lives in the `fusionforge` crate.

#![no_std]

extern crate alloc;

pub mod codec;
pub mod dataset;
pub mod denoise;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod fusion;
pub mod linalg;
pub mod metrics;
pub mod mining;
pub mod rng;
pub mod synth;

pub use dataset::{Dataset, ManifestEntry, ModalitySpec, Split};
pub use error::{Error, Result};
pub use features::{FeatureRecord, ModalityId, Pooling};
pub use fusion::{FusionMode, FusionModel, GroupSpec, Prediction, TrainConfig};
pub use metrics::{ConfusionMatrix, MetricReport};
