//! Sentence-level audio encoder: strided TCN front end, sinusoidal
//! positions, pre-LN transformer blocks and a mean-pool head.

mod config;
mod encoder;
mod params;

pub use config::{Activation, ConvLayer, Wav2SemConfig};
pub use encoder::{semantic_pool, sinusoidal_positions, BlockParams, Wav2SemModel};
pub use params::{ParamId, ParamStore};

use alloc::string::String;

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("cannot parse model configuration: {0}")]
    ParseConfig(String),
    #[error("clip has {got} samples; at least {required} are needed for one frame")]
    InputTooShort { got: usize, required: usize },
    #[error("parameter set does not match configuration: {0}")]
    ParamMismatch(String),
    #[error("model is frozen; parameters cannot be updated")]
    Frozen,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
