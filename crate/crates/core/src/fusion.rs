//! Frame-level phoneme features and the semantic fusion operator
//! `F_d[i] = fc2(fc1(F_s) + F_p[i])`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::audio::{AudioClip, SemanticEmbedding};
use crate::model::{ConvLayer, ModelError, ParamStore, Wav2SemConfig};
use crate::numerics::{Graph, NumericsError, Tensor, Var};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("span [{start_s}, {end_s}) s covers no frame centers")]
    EmptySpan { start_s: f64, end_s: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Anything that turns a clip into `[N', C]` frame features.
pub trait FrameEncoder {
    fn frame_features(&self, clip: &AudioClip) -> Result<Tensor, FusionError>;
    fn dim(&self) -> usize;
}

/// Frozen stand-in for a pretrained self-supervised speech encoder: a seeded
/// conv + GELU front end followed by one linear projection to `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeEncoder {
    schedule: Vec<ConvLayer>,
    conv: Vec<Tensor>,
    proj_weight: Tensor,
    proj_bias: Tensor,
    seed: u64,
}

impl PhonemeEncoder {
    pub fn new(schedule: &[ConvLayer], dim: usize, seed: u64) -> Result<Self, FusionError> {
        if schedule.is_empty() || dim == 0 {
            return Err(FusionError::DimMismatch(
                "phoneme encoder needs at least one conv layer and dim > 0".into(),
            ));
        }
        let mut rng = seeded(derive_seed(seed, 1));
        let mut cin = 1;
        let mut conv = Vec::with_capacity(schedule.len());
        for l in schedule {
            let fan_in = cin * l.kernel;
            conv.push(Tensor::randn(
                &[l.channels, cin, l.kernel],
                1.0 / libm::sqrt(fan_in as f64),
                &mut rng,
            ));
            cin = l.channels;
        }
        let proj_weight = Tensor::randn(&[cin, dim], 1.0 / libm::sqrt(cin as f64), &mut rng);
        Ok(Self {
            schedule: schedule.to_vec(),
            conv,
            proj_weight,
            proj_bias: Tensor::zeros(&[dim]),
            seed,
        })
    }

    /// Same frame schedule (and so the same frame count) as `config`.
    pub fn matching(config: &Wav2SemConfig, seed: u64) -> Result<Self, FusionError> {
        Self::new(&config.tcn_layers, config.model_dim, seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn min_samples(&self) -> usize {
        self.schedule
            .iter()
            .rev()
            .fold(1, |need, l| (need - 1) * l.stride + l.kernel)
    }

    pub fn frame_rate(&self, sample_rate: u32) -> f64 {
        sample_rate as f64 / self.schedule.iter().map(|l| l.stride).product::<usize>() as f64
    }
}

impl FrameEncoder for PhonemeEncoder {
    fn frame_features(&self, clip: &AudioClip) -> Result<Tensor, FusionError> {
        let required = self.min_samples();
        if clip.len() < required {
            return Err(ModelError::InputTooShort {
                got: clip.len(),
                required,
            }
            .into());
        }
        let mut g = Graph::new();
        let mut h = g.constant(Tensor::new(vec![1, clip.len()], clip.samples().to_vec())?);
        for (l, w) in self.schedule.iter().zip(&self.conv) {
            let wv = g.param(w);
            h = g.conv1d(h, wv, l.stride)?;
            h = g.gelu(h);
        }
        let h = g.transpose(h)?;
        let w = g.param(&self.proj_weight);
        let b = g.param(&self.proj_bias);
        let out = g.linear(h, w, b)?;
        Ok(g.tensor(out))
    }

    fn dim(&self) -> usize {
        self.proj_bias.numel()
    }
}

/// Two trainable `C → C` affine maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionHead {
    params: ParamStore,
    dim: usize,
}

pub const FC1_WEIGHT: usize = 0;
pub const FC1_BIAS: usize = 1;
pub const FC2_WEIGHT: usize = 2;
pub const FC2_BIAS: usize = 3;

impl FusionHead {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = seeded(derive_seed(seed, 2));
        let std = 1.0 / libm::sqrt(dim as f64);
        let mut params = ParamStore::new();
        params.push("fc1.weight".into(), Tensor::randn(&[dim, dim], std, &mut rng));
        params.push("fc1.bias".into(), Tensor::zeros(&[dim]));
        params.push("fc2.weight".into(), Tensor::randn(&[dim, dim], std, &mut rng));
        params.push("fc2.bias".into(), Tensor::zeros(&[dim]));
        Self { params, dim }
    }

    pub fn from_params(dim: usize, named: Vec<(String, Tensor)>) -> Result<Self, FusionError> {
        let mut head = Self::new(dim, 0);
        head.params.load(named)?;
        Ok(head)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Graph form: `semantic: [C]`, `frames: [N', C]` → `[N', C]`.
    pub fn fuse_graph(
        &self,
        g: &mut Graph<'_>,
        pv: &[Var],
        semantic: Var,
        frames: Var,
    ) -> Result<Var, FusionError> {
        let c = self.dim;
        if g.value(semantic).len() != c || g.shape(frames).len() != 2 || g.shape(frames)[1] != c {
            return Err(FusionError::DimMismatch(format!(
                "head dim {c}, semantic vector {:?}, frame features {:?}",
                g.shape(semantic),
                g.shape(frames)
            )));
        }
        let s = g.linear(semantic, pv[FC1_WEIGHT], pv[FC1_BIAS])?;
        let summed = g.add_row(frames, s)?;
        Ok(g.linear(summed, pv[FC2_WEIGHT], pv[FC2_BIAS])?)
    }

    pub fn fuse(&self, semantic: &SemanticEmbedding, frames: &Tensor) -> Result<Tensor, FusionError> {
        let mut g = Graph::new();
        let pv = self.params.bind(&mut g);
        let s = g.constant(Tensor::vector(semantic.values().to_vec()));
        let f = g.constant(frames.clone());
        let out = self.fuse_graph(&mut g, &pv, s, f)?;
        Ok(g.tensor(out))
    }
}

/// Mean of the frames whose centers `(i + 0.5) / frame_rate` fall in
/// `[start_s, end_s)`.
pub fn word_feature(
    features: &Tensor,
    span: (f64, f64),
    frame_rate: f64,
) -> Result<Vec<f64>, FusionError> {
    let (start_s, end_s) = span;
    if features.shape().len() != 2 {
        return Err(FusionError::DimMismatch(format!(
            "frame features must be [N, C], got {:?}",
            features.shape()
        )));
    }
    let c = features.shape()[1];
    let mut acc = vec![0.0; c];
    let mut count = 0usize;
    for i in 0..features.shape()[0] {
        let center = (i as f64 + 0.5) / frame_rate;
        if center >= start_s && center < end_s {
            acc.iter_mut()
                .zip(features.row(i))
                .for_each(|(a, v)| *a += v);
            count += 1;
        }
    }
    if count == 0 {
        return Err(FusionError::EmptySpan { start_s, end_s });
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

/// Number of frames whose centers fall in the span.
pub fn span_frame_count(frames: usize, span: (f64, f64), frame_rate: f64) -> usize {
    (0..frames)
        .filter(|&i| {
            let center = (i as f64 + 0.5) / frame_rate;
            center >= span.0 && center < span.1
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::EmbeddingKind;
    use crate::rng::normal_vec;

    fn clip(n: usize) -> AudioClip {
        let s = (0..n).map(|i| 0.4 * libm::sin(i as f64 * 0.021)).collect();
        AudioClip::new(s, 16_000).unwrap()
    }

    #[test]
    fn phoneme_encoder_is_frozen_and_seeded() {
        let cfg = Wav2SemConfig::tiny();
        let a = PhonemeEncoder::matching(&cfg, 5).unwrap();
        let b = PhonemeEncoder::matching(&cfg, 6).unwrap();
        let c = clip(640);
        let fa = a.frame_features(&c).unwrap();
        assert_eq!(fa, a.frame_features(&c).unwrap());
        let fb = b.frame_features(&c).unwrap();
        let diff = fa
            .data()
            .iter()
            .zip(fb.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff > 0.0);
        assert_eq!(fa.shape(), &[cfg.frame_count(640).unwrap(), 32]);
    }

    #[test]
    fn phoneme_encoder_rejects_short_clip() {
        let e = PhonemeEncoder::matching(&Wav2SemConfig::tiny(), 0).unwrap();
        assert!(matches!(
            e.frame_features(&clip(10)),
            Err(FusionError::Model(ModelError::InputTooShort { required: 30, .. }))
        ));
    }

    fn identity_head(dim: usize) -> FusionHead {
        let mut h = FusionHead::new(dim, 0);
        let p = h.params_mut();
        p.get_mut(crate::model::ParamId(FC1_WEIGHT)).data_mut().fill(0.0);
        *p.get_mut(crate::model::ParamId(FC2_WEIGHT)) = Tensor::identity(dim).with_requires_grad(true);
        h
    }

    #[test]
    fn zero_semantic_passes_frames_through() {
        let h = identity_head(3);
        let fp = Tensor::from_slice(&[2, 3], &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]).unwrap();
        let fs = SemanticEmbedding::new(vec![9.0, -9.0, 2.0], EmbeddingKind::Cls).unwrap();
        assert_eq!(h.fuse(&fs, &fp).unwrap(), fp);
    }

    #[test]
    fn semantic_vector_broadcasts() {
        let h = FusionHead::new(4, 11);
        let fs = SemanticEmbedding::new(vec![0.3, -0.1, 0.7, 1.2], EmbeddingKind::Cls).unwrap();
        let out = h.fuse(&fs, &Tensor::zeros(&[3, 4])).unwrap();
        assert_eq!(out.row(0), out.row(1));
        assert_eq!(out.row(1), out.row(2));
        let single = h.fuse(&fs, &Tensor::zeros(&[1, 4])).unwrap();
        assert_eq!(out.row(0), single.row(0));
    }

    #[test]
    fn distinct_semantics_separate_identical_frames() {
        let h = FusionHead::new(8, 1);
        let mut rng = seeded(77);
        let fp = Tensor::new(vec![5, 8], normal_vec(&mut rng, 40, 1.0)).unwrap();
        let s1 = SemanticEmbedding::new(normal_vec(&mut rng, 8, 1.0), EmbeddingKind::Cls).unwrap();
        let s2 = SemanticEmbedding::new(normal_vec(&mut rng, 8, 1.0), EmbeddingKind::Cls).unwrap();
        let a = h.fuse(&s1, &fp).unwrap();
        let b = h.fuse(&s2, &fp).unwrap();
        let d: f64 = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        assert!(d.sqrt() > 0.0);
    }

    #[test]
    fn fuse_rejects_dim_mismatch() {
        let h = FusionHead::new(4, 0);
        let fs = SemanticEmbedding::new(vec![1.0; 3], EmbeddingKind::Cls).unwrap();
        assert!(matches!(
            h.fuse(&fs, &Tensor::zeros(&[2, 4])),
            Err(FusionError::DimMismatch(_))
        ));
    }

    #[test]
    fn word_feature_cases() {
        let f = Tensor::from_slice(&[4, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        // frame rate 10 Hz: centers at 0.05, 0.15, 0.25, 0.35
        assert_eq!(word_feature(&f, (0.1, 0.2), 10.0).unwrap(), vec![3.0, 4.0]);
        assert_eq!(word_feature(&f, (0.0, 0.4), 10.0).unwrap(), vec![4.0, 5.0]);
        assert!(matches!(
            word_feature(&f, (0.16, 0.24), 10.0),
            Err(FusionError::EmptySpan { .. })
        ));
    }
}
