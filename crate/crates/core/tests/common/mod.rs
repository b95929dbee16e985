#![allow(dead_code)]

use fusionforge_core::features::ModalityId;
use fusionforge_core::fusion::{FusionMode, FusionModel, GroupSpec, Params};
use fusionforge_core::rng::Rng;

pub fn ids(names: &[&str]) -> Vec<ModalityId> {
    names.iter().map(|n| ModalityId::new(n).unwrap()).collect()
}

/// Random (untrained) model with the given modality dims.
pub fn random_model(seed: u64, dims: &[usize], d_model: Option<usize>, d_z: usize, classes: usize) -> FusionModel {
    let names = ["audio", "text", "vision", "joint_at", "extra"];
    let mods: Vec<(ModalityId, usize)> = names.iter().zip(dims).map(|(n, &d)| (ModalityId::new(n).unwrap(), d)).collect();
    let mut rng = Rng::seed(seed);
    let params = Params::init(&mut rng, &mods, d_model, d_z, classes);
    FusionModel {
        spec: GroupSpec::new(mods.iter().map(|m| m.0.clone()).collect()).unwrap(),
        dims: dims.to_vec(),
        mode: if d_model.is_some() { FusionMode::Attention } else { FusionMode::Concat },
        label_vocab: (0..classes).map(|k| format!("c{k}")).collect(),
        params,
        meta: Default::default(),
    }
}

pub fn random_inputs(seed: u64, dims: &[usize], scale: f64) -> Vec<Vec<f64>> {
    let mut rng = Rng::derive(seed, 77);
    dims.iter().map(|&d| (0..d).map(|_| scale * rng.gaussian()).collect()).collect()
}

pub fn views(xs: &[Vec<f64>]) -> Vec<&[f64]> {
    xs.iter().map(Vec::as_slice).collect()
}
