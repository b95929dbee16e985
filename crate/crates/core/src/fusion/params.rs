use alloc::string::String;
use alloc::vec::Vec;

use crate::features::ModalityId;
use crate::linalg::Matrix;
use crate::rng::Rng;

/// Per-modality input projection `h = x·weight + bias` into the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub modality: ModalityId,
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub d_model: usize,
    pub projections: Vec<Projection>,
    pub query: Matrix,
    pub key: Matrix,
    pub value: Matrix,
}

impl AttentionParams {
    pub fn projection(&self, modality: &ModalityId) -> Option<&Projection> {
        self.projections.iter().find(|p| &p.modality == modality)
    }
}

/// Affine layer to the hidden representation followed by the softmax layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionHead {
    pub z_weight: Matrix,
    pub z_bias: Matrix,
    pub smax_weight: Matrix,
    pub smax_bias: Matrix,
}

impl FusionHead {
    pub fn input_dim(&self) -> usize {
        self.z_weight.rows
    }

    pub fn num_classes(&self) -> usize {
        self.smax_weight.cols
    }
}

/// All trainable tensors of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub attention: Option<AttentionParams>,
    pub head: FusionHead,
}

fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = libm::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols).map(|_| rng.uniform_range(-limit, limit)).collect();
    Matrix::from_vec(rows, cols, data)
}

impl Params {
    /// Glorot-uniform weights, zero biases. Draw order: projections in spec
    /// order, query, key, value, head.
    pub fn init(
        rng: &mut Rng,
        modalities: &[(ModalityId, usize)],
        attention_width: Option<usize>,
        d_z: usize,
        classes: usize,
    ) -> Self {
        let (attention, fused_dim) = match attention_width {
            Some(d) => {
                let projections = modalities
                    .iter()
                    .map(|(m, dim)| Projection {
                        modality: m.clone(),
                        weight: xavier(rng, *dim, d),
                        bias: Matrix::zeros(1, d),
                    })
                    .collect();
                let query = xavier(rng, d, d);
                let key = xavier(rng, d, d);
                let value = xavier(rng, d, d);
                (
                    Some(AttentionParams {
                        d_model: d,
                        projections,
                        query,
                        key,
                        value,
                    }),
                    d,
                )
            }
            None => (None, modalities.iter().map(|(_, d)| d).sum()),
        };
        let head = FusionHead {
            z_weight: xavier(rng, fused_dim, d_z),
            z_bias: Matrix::zeros(1, d_z),
            smax_weight: xavier(rng, d_z, classes),
            smax_bias: Matrix::zeros(1, classes),
        };
        Self { attention, head }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        out
    }

    /// Named tensors in canonical order.
    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        if let Some(att) = &self.attention {
            for p in &att.projections {
                out.push((alloc::format!("proj.{}.weight", p.modality), &p.weight));
                out.push((alloc::format!("proj.{}.bias", p.modality), &p.bias));
            }
            out.push(("attn.query".into(), &att.query));
            out.push(("attn.key".into(), &att.key));
            out.push(("attn.value".into(), &att.value));
        }
        out.push(("head.z.weight".into(), &self.head.z_weight));
        out.push(("head.z.bias".into(), &self.head.z_bias));
        out.push(("head.smax.weight".into(), &self.head.smax_weight));
        out.push(("head.smax.bias".into(), &self.head.smax_bias));
        out
    }

    /// Mutable tensors in the same order as [`Params::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        if let Some(att) = &mut self.attention {
            for p in &mut att.projections {
                out.push(&mut p.weight);
                out.push(&mut p.bias);
            }
            out.push(&mut att.query);
            out.push(&mut att.key);
            out.push(&mut att.value);
        }
        out.push(&mut self.head.z_weight);
        out.push(&mut self.head.z_bias);
        out.push(&mut self.head.smax_weight);
        out.push(&mut self.head.smax_bias);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Rounds every entry to the nearest `f32`, the precision of model files.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = f64::from(*v as f32));
        }
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        let a = self.named_tensors();
        let b = other.named_tensors();
        a.len() == b.len()
            && a.iter().zip(&b).all(|((na, ta), (nb, tb))| {
                na == nb
                    && ta.rows == tb.rows
                    && ta.cols == tb.cols
                    && ta.data.iter().zip(&tb.data).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}
