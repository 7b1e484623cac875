use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ModelError;
use crate::audio::EmbeddingKind;

/// One strided convolution of the TCN front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayer {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvLayer {
    pub const fn new(channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            channels,
            kernel,
            stride,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Gelu,
}

/// Shape and seed of a sentence encoder; parameters follow from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Wav2SemConfig {
    pub tcn_layers: Vec<ConvLayer>,
    pub model_dim: usize,
    pub transformer_layers: usize,
    pub heads: usize,
    pub mlp_dim: usize,
    pub seed: u64,
    pub target_kind: EmbeddingKind,
    pub activation: Activation,
    pub layer_norm_eps: f64,
}

const CANONICAL_KERNELS: [usize; 7] = [10, 3, 3, 3, 3, 2, 2];
const CANONICAL_STRIDES: [usize; 7] = [5, 2, 2, 2, 2, 2, 2];

impl Wav2SemConfig {
    /// 7 × 512-channel TCN (≈49 frames/s at 16 kHz), 12 pre-LN blocks,
    /// 8 heads, MLP width 3072.
    pub fn canonical() -> Self {
        Self {
            tcn_layers: CANONICAL_KERNELS
                .iter()
                .zip(CANONICAL_STRIDES)
                .map(|(&k, s)| ConvLayer::new(512, k, s))
                .collect(),
            model_dim: 512,
            transformer_layers: 12,
            heads: 8,
            mlp_dim: 3072,
            seed: 0,
            target_kind: EmbeddingKind::Cls,
            activation: Activation::Gelu,
            layer_norm_eps: 1e-5,
        }
    }

    /// Desk-scale preset used for tests and fixture training.
    pub fn tiny() -> Self {
        Self {
            tcn_layers: [(10, 5), (3, 2), (2, 2)]
                .iter()
                .map(|&(k, s)| ConvLayer::new(32, k, s))
                .collect(),
            model_dim: 32,
            transformer_layers: 2,
            heads: 2,
            mlp_dim: 64,
            seed: 0,
            target_kind: EmbeddingKind::Cls,
            activation: Activation::Gelu,
            layer_norm_eps: 1e-5,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.tcn_layers.is_empty() {
            return bad("at least one TCN layer is required".into());
        }
        for (i, l) in self.tcn_layers.iter().enumerate() {
            if l.channels == 0 || l.kernel == 0 || l.stride == 0 {
                return bad(format!("TCN layer {i} has a zero channel/kernel/stride"));
            }
        }
        let last = self.tcn_layers.last().unwrap().channels;
        if last != self.model_dim {
            return bad(format!(
                "last TCN layer has {last} channels but model_dim is {}",
                self.model_dim
            ));
        }
        if self.model_dim == 0 || self.transformer_layers == 0 || self.heads == 0 {
            return bad("model_dim, transformer_layers and heads must be positive".into());
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return bad(format!(
                "model_dim {} is not divisible by {} heads",
                self.model_dim, self.heads
            ));
        }
        if self.mlp_dim < self.model_dim {
            return bad(format!(
                "mlp_dim {} must be >= model_dim {}",
                self.mlp_dim, self.model_dim
            ));
        }
        if self.layer_norm_eps.is_nan() || self.layer_norm_eps <= 0.0 {
            return bad("layer_norm_eps must be > 0".into());
        }
        Ok(())
    }

    /// Shortest input that yields one output frame.
    pub fn min_samples(&self) -> usize {
        self.tcn_layers
            .iter()
            .rev()
            .fold(1, |need, l| (need - 1) * l.stride + l.kernel)
    }

    /// Frames produced for `samples` input samples, if long enough.
    pub fn frame_count(&self, samples: usize) -> Option<usize> {
        self.tcn_layers.iter().try_fold(samples, |len, l| {
            (len >= l.kernel).then(|| (len - l.kernel) / l.stride + 1)
        })
    }

    /// Product of strides: input samples per output frame.
    pub fn hop(&self) -> usize {
        self.tcn_layers.iter().map(|l| l.stride).product()
    }

    pub fn frame_rate(&self, sample_rate: u32) -> f64 {
        sample_rate as f64 / self.hop() as f64
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        self.checked_param_count()
            .expect("parameter count overflows usize")
    }

    /// `None` when the count does not fit in `usize`.
    pub fn checked_param_count(&self) -> Option<usize> {
        let mut cin = 1usize;
        let mut n = 0usize;
        for l in &self.tcn_layers {
            n = n.checked_add(l.channels.checked_mul(cin)?.checked_mul(l.kernel)?)?;
            cin = l.channels;
        }
        let c = self.model_dim;
        let m = self.mlp_dim;
        let cc = c.checked_mul(c)?;
        let cm = c.checked_mul(m)?;
        // 2 layer norms, 4 attention projections, 2 MLP layers
        let per_layer = (4 * c)
            .checked_add(cc.checked_add(c)?.checked_mul(4)?)?
            .checked_add(cm.checked_add(m)?)?
            .checked_add(cm.checked_add(c)?)?;
        n.checked_add(self.transformer_layers.checked_mul(per_layer)?)
    }

    /// Canonical `key=value` text, one key per line, fixed order.
    pub fn to_text(&self) -> String {
        let tcn: Vec<String> = self
            .tcn_layers
            .iter()
            .map(|l| format!("{}:{}:{}", l.channels, l.kernel, l.stride))
            .collect();
        format!(
            "tcn_layers={}\nmodel_dim={}\ntransformer_layers={}\nheads={}\nmlp_dim={}\nseed={}\ntarget_kind={}\nactivation=gelu\nlayer_norm_eps={:?}\n",
            tcn.join(","),
            self.model_dim,
            self.transformer_layers,
            self.heads,
            self.mlp_dim,
            self.seed,
            match self.target_kind {
                EmbeddingKind::Cls => "cls",
                EmbeddingKind::Mean => "mean",
            },
            self.layer_norm_eps,
        )
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut cfg = Self::tiny();
        let mut seen = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ModelError::ParseConfig(format!("missing '=' in {line:?}")))?;
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| ModelError::ParseConfig(format!("{key}: bad integer {v:?}")))
            };
            match key {
                "tcn_layers" => {
                    cfg.tcn_layers = value
                        .split(',')
                        .map(|layer| {
                            let parts: Vec<&str> = layer.split(':').collect();
                            if parts.len() != 3 {
                                return Err(ModelError::ParseConfig(format!(
                                    "tcn layer {layer:?} is not channels:kernel:stride"
                                )));
                            }
                            Ok(ConvLayer::new(int(parts[0])?, int(parts[1])?, int(parts[2])?))
                        })
                        .collect::<Result<_, _>>()?;
                }
                "model_dim" => cfg.model_dim = int(value)?,
                "transformer_layers" => cfg.transformer_layers = int(value)?,
                "heads" => cfg.heads = int(value)?,
                "mlp_dim" => cfg.mlp_dim = int(value)?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| ModelError::ParseConfig(format!("seed: bad integer {value:?}")))?
                }
                "target_kind" => {
                    cfg.target_kind = match value {
                        "cls" => EmbeddingKind::Cls,
                        "mean" => EmbeddingKind::Mean,
                        other => {
                            return Err(ModelError::ParseConfig(format!(
                                "unknown target_kind {other:?}"
                            )))
                        }
                    }
                }
                "activation" => {
                    if value != "gelu" {
                        return Err(ModelError::ParseConfig(format!(
                            "unknown activation {value:?}"
                        )));
                    }
                }
                "layer_norm_eps" => {
                    cfg.layer_norm_eps = value.parse().map_err(|_| {
                        ModelError::ParseConfig(format!("layer_norm_eps: bad number {value:?}"))
                    })?
                }
                other => return Err(ModelError::ParseConfig(format!("unknown key {other:?}"))),
            }
            seen.push(key.to_string());
        }
        for required in [
            "tcn_layers",
            "model_dim",
            "transformer_layers",
            "heads",
            "mlp_dim",
            "seed",
        ] {
            if !seen.iter().any(|k| k == required) {
                return Err(ModelError::ParseConfig(format!("missing key {required}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
