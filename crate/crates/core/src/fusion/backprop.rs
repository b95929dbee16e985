//! Forward evaluation and the hand-derived backward pass.

use alloc::vec;
use alloc::vec::Vec;

use super::params::{AttentionParams, FusionHead, Params};
use super::Prediction;
use crate::error::{Error, Result};
use crate::features::ModalityId;
use crate::linalg::{self, Matrix};

struct AttentionCache {
    hidden: Vec<Vec<f64>>,
    query: Vec<Vec<f64>>,
    key: Vec<Vec<f64>>,
    value: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

fn project(x: &[f64], weight: &Matrix, bias: &Matrix) -> Vec<f64> {
    let mut h = weight.vec_mul(x);
    linalg::add_assign(&mut h, &bias.data);
    h
}

fn attend(hidden: Vec<Vec<f64>>, att: &AttentionParams) -> (Vec<f64>, AttentionCache) {
    let m = hidden.len();
    let d = att.d_model;
    let query: Vec<Vec<f64>> = hidden.iter().map(|h| att.query.vec_mul(h)).collect();
    let key: Vec<Vec<f64>> = hidden.iter().map(|h| att.key.vec_mul(h)).collect();
    let value: Vec<Vec<f64>> = hidden.iter().map(|h| att.value.vec_mul(h)).collect();
    let inv_sqrt_d = 1.0 / libm::sqrt(d as f64);

    let mut fused = vec![0.0; d];
    let mut weights = Vec::with_capacity(m);
    for q in &query {
        let scores: Vec<f64> = key.iter().map(|k| linalg::dot(q, k) * inv_sqrt_d).collect();
        let a = linalg::softmax(&scores);
        for (aj, v) in a.iter().zip(&value) {
            for (f, &vv) in fused.iter_mut().zip(v) {
                *f += aj * vv;
            }
        }
        weights.push(a);
    }
    linalg::scale(&mut fused, 1.0 / m as f64);
    (
        fused,
        AttentionCache {
            hidden,
            query,
            key,
            value,
            weights,
        },
    )
}

/// Projects each token, applies single-head self-attention across tokens and
/// returns the mean of the attended token vectors.
pub fn attention_fuse(tokens: &[(ModalityId, &[f64])], params: &AttentionParams) -> Result<Vec<f64>> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("attention needs at least one token".into()));
    }
    let mut hidden = Vec::with_capacity(tokens.len());
    for (m, x) in tokens {
        let p = params
            .projection(m)
            .ok_or_else(|| Error::Parameter(alloc::format!("no projection for modality {m}")))?;
        if x.len() != p.weight.rows {
            return Err(Error::DimMismatch {
                expected: p.weight.rows,
                found: x.len(),
                context: alloc::format!("token {m}"),
            });
        }
        hidden.push(project(x, &p.weight, &p.bias));
    }
    Ok(attend(hidden, params).0)
}

fn logits(fused: &[f64], head: &FusionHead) -> (Vec<f64>, Vec<f64>) {
    let mut z = head.z_weight.vec_mul(fused);
    linalg::add_assign(&mut z, &head.z_bias.data);
    let mut l = head.smax_weight.vec_mul(&z);
    linalg::add_assign(&mut l, &head.smax_bias.data);
    (z, l)
}

/// Affine projection, softmax and argmax.
pub fn forward(fused: &[f64], head: &FusionHead) -> Result<Prediction> {
    if fused.len() != head.input_dim() {
        return Err(Error::DimMismatch {
            expected: head.input_dim(),
            found: fused.len(),
            context: "fused vector".into(),
        });
    }
    if !fused.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("fused input".into()));
    }
    let (_, l) = logits(fused, head);
    let probs = linalg::softmax(&l);
    if !probs.iter().all(|p| p.is_finite()) {
        return Err(Error::NonFinite("class probabilities".into()));
    }
    Ok(Prediction::from_probs(probs))
}

/// Cross-entropy `-ln p[label]` of one example, given inputs in spec order.
pub fn loss(params: &Params, inputs: &[&[f64]], label: usize) -> f64 {
    let fused = match &params.attention {
        Some(att) => {
            let hidden = inputs
                .iter()
                .zip(&att.projections)
                .map(|(x, p)| project(x, &p.weight, &p.bias))
                .collect();
            attend(hidden, att).0
        }
        None => inputs.concat(),
    };
    let (_, l) = logits(&fused, &params.head);
    cross_entropy(&l, label)
}

fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|&l| libm::exp(l - max)).sum::<f64>());
    lse - logits[label]
}

/// Adds the gradient of `-ln p[label]` to `grads` and returns the loss.
///
/// `grads` must have the same shapes as `params`.
pub fn loss_and_grad(params: &Params, inputs: &[&[f64]], label: usize, grads: &mut Params) -> f64 {
    let (fused, cache) = match &params.attention {
        Some(att) => {
            let hidden = inputs
                .iter()
                .zip(&att.projections)
                .map(|(x, p)| project(x, &p.weight, &p.bias))
                .collect();
            let (f, c) = attend(hidden, att);
            (f, Some(c))
        }
        None => (inputs.concat(), None),
    };
    let head = &params.head;
    let (z, l) = logits(&fused, head);
    let loss = cross_entropy(&l, label);

    // d loss / d logits = p - onehot(label)
    let mut dl = linalg::softmax(&l);
    dl[label] -= 1.0;

    let gh = &mut grads.head;
    gh.smax_weight.add_outer(&z, &dl);
    linalg::add_assign(&mut gh.smax_bias.data, &dl);
    let dz = head.smax_weight.mul_vec(&dl);
    gh.z_weight.add_outer(&fused, &dz);
    linalg::add_assign(&mut gh.z_bias.data, &dz);

    let (Some(att), Some(cache), Some(gatt)) = (&params.attention, cache, &mut grads.attention) else {
        return loss;
    };
    let df = head.z_weight.mul_vec(&dz);
    let m = cache.hidden.len();
    let d = att.d_model;
    let inv_sqrt_d = 1.0 / libm::sqrt(d as f64);

    // Every attended row contributes df / m to the fused mean.
    let mut d_out = df;
    linalg::scale(&mut d_out, 1.0 / m as f64);

    let mut dq = vec![vec![0.0; d]; m];
    let mut dk = vec![vec![0.0; d]; m];
    let mut dv = vec![vec![0.0; d]; m];
    let d_out_dot_v: Vec<f64> = cache.value.iter().map(|v| linalg::dot(&d_out, v)).collect();
    for i in 0..m {
        let a = &cache.weights[i];
        for j in 0..m {
            for (g, &o) in dv[j].iter_mut().zip(&d_out) {
                *g += a[j] * o;
            }
        }
        // softmax backward with da_ij = d_out · v_j
        let mean: f64 = a.iter().zip(&d_out_dot_v).map(|(aj, g)| aj * g).sum();
        for j in 0..m {
            let ds = a[j] * (d_out_dot_v[j] - mean) * inv_sqrt_d;
            if ds == 0.0 {
                continue;
            }
            for (g, &kv) in dq[i].iter_mut().zip(&cache.key[j]) {
                *g += ds * kv;
            }
            for (g, &qv) in dk[j].iter_mut().zip(&cache.query[i]) {
                *g += ds * qv;
            }
        }
    }

    for (i, x) in inputs.iter().enumerate() {
        let h = &cache.hidden[i];
        gatt.query.add_outer(h, &dq[i]);
        gatt.key.add_outer(h, &dk[i]);
        gatt.value.add_outer(h, &dv[i]);
        let mut dh = att.query.mul_vec(&dq[i]);
        linalg::add_assign(&mut dh, &att.key.mul_vec(&dk[i]));
        linalg::add_assign(&mut dh, &att.value.mul_vec(&dv[i]));
        let gp = &mut gatt.projections[i];
        gp.weight.add_outer(x, &dh);
        linalg::add_assign(&mut gp.bias.data, &dh);
    }
    loss
}
