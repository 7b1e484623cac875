//! Allocation-only core of the Wav2Sem toolchain.
//!
//! Everything in here is pure computation over in-memory values: a small
//! dense-tensor kernel with reverse-mode differentiation, the sentence-level
//! audio encoder built on it, the semantic fusion operator, facial-animation
//! vertex metrics, and the near-homophone analysis routines. File formats,
//! the training driver that writes checkpoints, and the command-line tool
//! live in the `wav2sem` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod audio;
pub mod fusion;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod training;

pub use audio::{AudioClip, AudioError, EmbeddingKind, SemanticEmbedding};
pub use fusion::{FusionHead, PhonemeEncoder};
pub use model::{Wav2SemConfig, Wav2SemModel};
pub use numerics::{Graph, NumericsError, Tensor, Var};
