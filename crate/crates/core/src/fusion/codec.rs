//! Binary model files.
//!
//! ```text
//! "MMFM" | u32 version
//! u32 n | n × short_str                      label vocabulary
//! u32 m | m × (short_str modality, u32 dim)  group spec
//! u8 fusion mode (0 attention, 1 concat)
//! u32 t | t × (short_str name, u32 rows, u32 cols, rows×cols f32)
//! ```
//!
//! `short_str` is a u16 byte length followed by UTF-8. All integers and floats
//! are little-endian. Training metadata travels in a separate JSON sidecar.

use alloc::string::String;
use alloc::vec::Vec;

use super::params::{AttentionParams, FusionHead, Params, Projection};
use super::train::TrainingMeta;
use super::{FusionMode, FusionModel, GroupSpec};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::features::ModalityId;
use crate::linalg::Matrix;

pub const MODEL_MAGIC: [u8; 4] = *b"MMFM";
pub const MODEL_VERSION: u32 = 1;

fn len_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(alloc::format!("{what} exceeds u32")))
}

pub fn encode_model(model: &FusionModel) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(&MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.u32(len_u32(model.label_vocab.len(), "vocabulary size")?);
    for label in &model.label_vocab {
        w.short_str(label)?;
    }
    w.u32(len_u32(model.spec.len(), "group size")?);
    for (m, &dim) in model.spec.modalities().iter().zip(&model.dims) {
        w.short_str(m.as_str())?;
        w.u32(len_u32(dim, "modality dim")?);
    }
    w.u8(match model.mode {
        FusionMode::Attention => 0,
        FusionMode::Concat => 1,
    });
    let tensors = model.params.named_tensors();
    w.u32(len_u32(tensors.len(), "tensor count")?);
    for (name, t) in tensors {
        w.short_str(&name)?;
        w.u32(len_u32(t.rows, "rows")?);
        w.u32(len_u32(t.cols, "cols")?);
        for &v in &t.data {
            w.f32(v as f32);
        }
    }
    Ok(w.finish())
}

struct TensorReader<'a, 'b> {
    r: &'b mut Reader<'a>,
    remaining: u32,
}

impl TensorReader<'_, '_> {
    fn next(&mut self, name: &str, rows: Option<usize>, cols: Option<usize>) -> Result<Matrix> {
        if self.remaining == 0 {
            return Err(Error::Format(alloc::format!("missing tensor {name}")));
        }
        self.remaining -= 1;
        let found = self.r.short_str()?;
        if found != name {
            return Err(Error::Format(alloc::format!("expected tensor {name}, found {found}")));
        }
        let r = self.r.u32()? as usize;
        let c = self.r.u32()? as usize;
        if rows.is_some_and(|x| x != r) || cols.is_some_and(|x| x != c) {
            return Err(Error::Format(alloc::format!("tensor {name} has unexpected shape {r}x{c}")));
        }
        let data = self.r.f32s(r * c)?.into_iter().map(f64::from).collect();
        Ok(Matrix::from_vec(r, c, data))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<FusionModel> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = r.u32()?;
    let label_vocab = (0..n).map(|_| r.short_str()).collect::<Result<Vec<String>>>()?;
    let m = r.u32()?;
    let mut ids = Vec::new();
    let mut dims = Vec::new();
    for _ in 0..m {
        ids.push(ModalityId::new(&r.short_str()?)?);
        dims.push(r.u32()? as usize);
    }
    let spec = GroupSpec::new(ids)?;
    let mode = match r.u8()? {
        0 => FusionMode::Attention,
        1 => FusionMode::Concat,
        other => return Err(Error::Format(alloc::format!("unknown fusion mode tag {other}"))),
    };
    let remaining = r.u32()?;
    let mut t = TensorReader { r: &mut r, remaining };

    let classes = label_vocab.len();
    let (attention, fused_dim) = match mode {
        FusionMode::Attention => {
            let mut projections = Vec::new();
            let mut d_model = None;
            for (m, &dim) in spec.modalities().iter().zip(&dims) {
                let weight = t.next(&alloc::format!("proj.{m}.weight"), Some(dim), d_model)?;
                d_model = Some(weight.cols);
                let bias = t.next(&alloc::format!("proj.{m}.bias"), Some(1), d_model)?;
                projections.push(Projection {
                    modality: m.clone(),
                    weight,
                    bias,
                });
            }
            let d = d_model.ok_or_else(|| Error::Format("attention model without modalities".into()))?;
            let query = t.next("attn.query", Some(d), Some(d))?;
            let key = t.next("attn.key", Some(d), Some(d))?;
            let value = t.next("attn.value", Some(d), Some(d))?;
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
        FusionMode::Concat => (None, dims.iter().sum()),
    };
    let z_weight = t.next("head.z.weight", Some(fused_dim), None)?;
    let d_z = z_weight.cols;
    let z_bias = t.next("head.z.bias", Some(1), Some(d_z))?;
    let smax_weight = t.next("head.smax.weight", Some(d_z), Some(classes))?;
    let smax_bias = t.next("head.smax.bias", Some(1), Some(classes))?;
    if t.remaining != 0 {
        return Err(Error::Format(alloc::format!("{} unexpected extra tensors", t.remaining)));
    }
    if r.remaining() != 0 {
        return Err(Error::TrailingBytes { trailing: r.remaining() });
    }
    Ok(FusionModel {
        spec,
        dims,
        mode,
        label_vocab,
        params: Params {
            attention,
            head: FusionHead {
                z_weight,
                z_bias,
                smax_weight,
                smax_bias,
            },
        },
        meta: TrainingMeta::default(),
    })
}
