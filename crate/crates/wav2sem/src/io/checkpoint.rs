//! `W2SEMCK1`, then
//! - u32 length + canonical config text,
//! - u32 parameter count; per parameter u32 name length, name, u32 rank,
//!   rank × u32 dims, f64 values,
//! - u8 optimizer flag; when 1: u64 step, f64 lr, β1, β2, ε, u32 tensor
//!   count, then per tensor u32 length + first moment, then the same for
//!   the second moment.

use std::path::Path;

use wav2sem_core::model::ModelError;
use wav2sem_core::numerics::{AdamConfig, AdamState};
use wav2sem_core::{Tensor, Wav2SemConfig, Wav2SemModel};

use super::{put_f64s, put_u32, BinError, Reader};
use crate::error::{read_bytes, write_bytes, Error, Result};

pub const MAGIC: &[u8; 8] = b"W2SEMCK1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Binary(#[from] BinError),
    #[error("config record: {0}")]
    Config(ModelError),
    #[error("parameters: {0}")]
    Params(ModelError),
    #[error("optimizer state: {0}")]
    Optimizer(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Wav2SemModel,
    pub optimizer: Option<AdamState>,
}

pub fn encode_checkpoint(model: &Wav2SemModel, optimizer: Option<&AdamState>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let cfg = model.config().to_text();
    put_u32(&mut out, cfg.len() as u32);
    out.extend_from_slice(cfg.as_bytes());
    put_u32(&mut out, model.params().len() as u32);
    for (name, t) in model.params().iter() {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.shape().len() as u32);
        for &d in t.shape() {
            put_u32(&mut out, d as u32);
        }
        put_f64s(&mut out, t.data());
    }
    match optimizer {
        None => out.push(0),
        Some(a) => {
            out.push(1);
            out.extend_from_slice(&a.step_count().to_le_bytes());
            let c = a.config;
            put_f64s(&mut out, &[c.learning_rate, c.beta1, c.beta2, c.epsilon]);
            for moments in [a.first_moment(), a.second_moment()] {
                put_u32(&mut out, moments.len() as u32);
                for m in moments {
                    put_u32(&mut out, m.len() as u32);
                    put_f64s(&mut out, m);
                }
            }
        }
    }
    out
}

fn utf8(bytes: &[u8], field: &'static str) -> Result<String, BinError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| BinError::Field {
        field,
        message: "not valid UTF-8".into(),
    })
}

fn moments(r: &mut Reader<'_>) -> Result<Vec<Vec<f64>>, BinError> {
    let n = r.u32("moment count")? as usize;
    (0..n)
        .map(|_| {
            let len = r.u32("moment length")? as usize;
            r.f64s(len, "moment values")
        })
        .collect()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC, "W2SEMCK1")?;
    let cfg_len = r.u32("config length")? as usize;
    let cfg_text = utf8(r.take(cfg_len, "config record")?, "config record")?;
    let config = Wav2SemConfig::from_text(&cfg_text).map_err(CheckpointError::Config)?;
    // refuse to allocate a model the file cannot possibly hold
    let expected = config
        .checked_param_count()
        .filter(|&n| n <= r.remaining() / 8)
        .ok_or_else(|| BinError::Field {
            field: "config record",
            message: "declared model is larger than the file".into(),
        })?;
    let count = r.u32("parameter count")? as usize;
    let mut named = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = utf8(r.take(name_len, "parameter name")?, "parameter name")?;
        let rank = r.u32("rank")? as usize;
        let dims = (0..rank)
            .map(|_| r.u32("dimension").map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let numel = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or(BinError::Field {
            field: "shape",
            message: format!("{name}: shape {dims:?} overflows"),
        })?;
        let values = r.f64s(numel, "parameter values")?;
        let t = Tensor::new(dims, values).map_err(|e| BinError::Field {
            field: "shape",
            message: format!("{name}: {e}"),
        })?;
        named.push((name, t));
    }
    let stored: usize = named.iter().map(|(_, t)| t.numel()).sum();
    if stored != expected {
        return Err(CheckpointError::Params(ModelError::ParamMismatch(format!(
            "config needs {expected} values, file stores {stored}"
        ))));
    }
    let model = Wav2SemModel::from_params(config, named).map_err(CheckpointError::Params)?;
    let optimizer = match r.u8("optimizer flag")? {
        0 => None,
        1 => {
            let step = r.u64("optimizer step")?;
            let config = AdamConfig {
                learning_rate: r.f64("learning rate")?,
                beta1: r.f64("beta1")?,
                beta2: r.f64("beta2")?,
                epsilon: r.f64("epsilon")?,
            };
            let first = moments(&mut r)?;
            let second = moments(&mut r)?;
            let sizes: Vec<usize> = model.params().tensors().iter().map(Tensor::numel).collect();
            if first.iter().map(Vec::len).ne(sizes.iter().copied()) {
                return Err(CheckpointError::Optimizer(
                    "moment buffers do not match the parameter shapes".into(),
                ));
            }
            Some(
                AdamState::from_parts(config, step, first, second)
                    .map_err(|e| CheckpointError::Optimizer(e.to_string()))?,
            )
        }
        f => {
            return Err(BinError::Field {
                field: "optimizer flag",
                message: format!("expected 0 or 1, got {f}"),
            }
            .into())
        }
    };
    r.finish()?;
    Ok(Checkpoint { model, optimizer })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_bytes(path)?).map_err(|source| Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_checkpoint(path: &Path, model: &Wav2SemModel, optimizer: Option<&AdamState>) -> Result<()> {
    write_bytes(path, &encode_checkpoint(model, optimizer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(3)).unwrap();
        let adam = AdamState::new(AdamConfig::with_learning_rate(2e-3), model.params().tensors());
        for opt in [None, Some(&adam)] {
            let bytes = encode_checkpoint(&model, opt);
            let ck = decode_checkpoint(&bytes).unwrap();
            assert_eq!(ck.model, model);
            assert_eq!(ck.optimizer.as_ref(), opt);
            assert_eq!(encode_checkpoint(&ck.model, ck.optimizer.as_ref()), bytes);
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let model = Wav2SemModel::new(Wav2SemConfig::tiny()).unwrap();
        let bytes = encode_checkpoint(&model, None);
        assert!(decode_checkpoint(b"garbage!").is_err());
        assert!(decode_checkpoint(&bytes[..bytes.len() / 2]).is_err());
        let mut flag = bytes.clone();
        *flag.last_mut().unwrap() = 9;
        assert!(decode_checkpoint(&flag).is_err());
        let mut cfg = bytes.clone();
        // model_dim=32 -> model_dim=33 breaks every shape
        let pos = cfg.windows(12).position(|w| w == b"model_dim=32").unwrap();
        cfg[pos + 11] = b'3';
        assert!(matches!(decode_checkpoint(&cfg), Err(CheckpointError::Config(_) | CheckpointError::Params(_))));
    }
}
