use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{ModelError, ParamId, ParamStore, Wav2SemConfig};
use crate::audio::{AudioClip, SemanticEmbedding};
use crate::numerics::{AttentionVars, Graph, Tensor, Var};
use crate::rng::seeded;

/// Parameter ids of one pre-LN transformer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockParams {
    pub ln1_gain: ParamId,
    pub ln1_shift: ParamId,
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
    pub ln2_gain: ParamId,
    pub ln2_shift: ParamId,
    pub mlp_w1: ParamId,
    pub mlp_b1: ParamId,
    pub mlp_w2: ParamId,
    pub mlp_b2: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wav2SemModel {
    config: Wav2SemConfig,
    params: ParamStore,
    tcn: Vec<ParamId>,
    blocks: Vec<BlockParams>,
    frozen: bool,
}

/// `PE[p, 2i] = sin(p / 10000^(2i/C))`, `PE[p, 2i+1] = cos(·)`.
pub fn sinusoidal_positions(frames: usize, dim: usize) -> Tensor {
    let mut t = Tensor::zeros(&[frames, dim]);
    let d = t.data_mut();
    for p in 0..frames {
        for i in 0..dim {
            let pair = (i / 2) * 2;
            let angle = p as f64 / libm::pow(10_000.0, pair as f64 / dim as f64);
            d[p * dim + i] = if i % 2 == 0 {
                libm::sin(angle)
            } else {
                libm::cos(angle)
            };
        }
    }
    t
}

/// Arithmetic mean of the frame vectors of `frames: [N, C]`.
pub fn semantic_pool(
    frames: &Tensor,
    kind: crate::audio::EmbeddingKind,
) -> Result<SemanticEmbedding, ModelError> {
    let mut g = Graph::new();
    let z = g.constant(frames.clone());
    let pooled = g.mean_rows(z)?;
    SemanticEmbedding::new(g.value(pooled).to_vec(), kind)
        .map_err(|e| ModelError::Config(format!("{e}")))
}

fn scaled_normal(shape: &[usize], fan_in: usize, rng: &mut crate::rng::SeededRng) -> Tensor {
    Tensor::randn(shape, 1.0 / libm::sqrt(fan_in as f64), rng)
}

impl Wav2SemModel {
    /// Seeded construction; weights are N(0, 1/fan_in), biases and shifts 0,
    /// layer-norm gains 1.
    pub fn new(config: Wav2SemConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = seeded(config.seed);
        let mut params = ParamStore::new();
        let mut tcn = Vec::with_capacity(config.tcn_layers.len());
        let mut cin = 1;
        for (i, l) in config.tcn_layers.iter().enumerate() {
            let w = scaled_normal(&[l.channels, cin, l.kernel], cin * l.kernel, &mut rng);
            tcn.push(params.push(format!("tcn.{i}.weight"), w));
            cin = l.channels;
        }
        let c = config.model_dim;
        let m = config.mlp_dim;
        let mut blocks = Vec::with_capacity(config.transformer_layers);
        for l in 0..config.transformer_layers {
            let mut add = |name: &str, t: Tensor| params.push(format!("layers.{l}.{name}"), t);
            let ones = Tensor::vector(vec![1.0; c]);
            let ln1_gain = add("ln1.gain", ones.clone());
            let ln1_shift = add("ln1.shift", Tensor::zeros(&[c]));
            let wq = add("attn.wq", scaled_normal(&[c, c], c, &mut rng));
            let bq = add("attn.bq", Tensor::zeros(&[c]));
            let wk = add("attn.wk", scaled_normal(&[c, c], c, &mut rng));
            let bk = add("attn.bk", Tensor::zeros(&[c]));
            let wv = add("attn.wv", scaled_normal(&[c, c], c, &mut rng));
            let bv = add("attn.bv", Tensor::zeros(&[c]));
            let wo = add("attn.wo", scaled_normal(&[c, c], c, &mut rng));
            let bo = add("attn.bo", Tensor::zeros(&[c]));
            let ln2_gain = add("ln2.gain", ones);
            let ln2_shift = add("ln2.shift", Tensor::zeros(&[c]));
            let mlp_w1 = add("mlp.w1", scaled_normal(&[c, m], c, &mut rng));
            let mlp_b1 = add("mlp.b1", Tensor::zeros(&[m]));
            let mlp_w2 = add("mlp.w2", scaled_normal(&[m, c], m, &mut rng));
            let mlp_b2 = add("mlp.b2", Tensor::zeros(&[c]));
            blocks.push(BlockParams {
                ln1_gain,
                ln1_shift,
                wq,
                bq,
                wk,
                bk,
                wv,
                bv,
                wo,
                bo,
                ln2_gain,
                ln2_shift,
                mlp_w1,
                mlp_b1,
                mlp_w2,
                mlp_b2,
            });
        }
        Ok(Self {
            config,
            params,
            tcn,
            blocks,
            frozen: false,
        })
    }

    /// Builds the layout for `config` and loads saved values into it.
    pub fn from_params(
        config: Wav2SemConfig,
        named: Vec<(alloc::string::String, Tensor)>,
    ) -> Result<Self, ModelError> {
        let mut model = Self::new(config)?;
        model.params.load(named)?;
        Ok(model)
    }

    pub fn config(&self) -> &Wav2SemConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Mutable access for optimizers; fails once frozen.
    pub fn params_mut(&mut self) -> Result<&mut ParamStore, ModelError> {
        if self.frozen {
            return Err(ModelError::Frozen);
        }
        Ok(&mut self.params)
    }

    pub fn blocks(&self) -> &[BlockParams] {
        &self.blocks
    }

    /// Marks parameters read-only for the rest of the model's life. Idempotent.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>) -> Vec<Var> {
        self.params.bind(g)
    }

    fn check_clip(&self, clip: &AudioClip) -> Result<(), ModelError> {
        let required = self.config.min_samples();
        if clip.len() < required {
            return Err(ModelError::InputTooShort {
                got: clip.len(),
                required,
            });
        }
        Ok(())
    }

    /// Conv + GELU stack; returns frame features `[N, C]`.
    pub fn tcn_graph(&self, g: &mut Graph<'_>, pv: &[Var], clip: &AudioClip) -> Result<Var, ModelError> {
        self.check_clip(clip)?;
        let x = Tensor::new(vec![1, clip.len()], clip.samples().to_vec())?;
        let mut h = g.constant(x);
        for (layer, id) in self.config.tcn_layers.iter().zip(&self.tcn) {
            h = g.conv1d(h, pv[id.0], layer.stride)?;
            h = g.gelu(h);
        }
        Ok(g.transpose(h)?)
    }

    /// Adds positions to `z: [N, C]` and runs every block.
    pub fn transformer_graph(&self, g: &mut Graph<'_>, pv: &[Var], z: Var) -> Result<Var, ModelError> {
        let s = g.shape(z).to_vec();
        if s.len() != 2 || s[1] != self.config.model_dim || s[0] == 0 {
            return Err(ModelError::Config(format!(
                "transformer input must be [N, {}], got {s:?}",
                self.config.model_dim
            )));
        }
        let pe = g.constant(sinusoidal_positions(s[0], s[1]));
        let mut h = g.add(z, pe)?;
        for b in &self.blocks {
            h = self.block_graph(g, pv, b, h)?;
        }
        Ok(h)
    }

    /// `Ẑ = Z + MHSA(LN(Z))`, `Z' = Ẑ + MLP(LN(Ẑ))`.
    pub fn block_graph(
        &self,
        g: &mut Graph<'_>,
        pv: &[Var],
        b: &BlockParams,
        z: Var,
    ) -> Result<Var, ModelError> {
        let p = |id: ParamId| pv[id.0];
        let eps = self.config.layer_norm_eps;
        let h = g.layer_norm(z, p(b.ln1_gain), p(b.ln1_shift), eps)?;
        let attn = g.multi_head_self_attention(
            h,
            self.config.heads,
            &AttentionVars {
                wq: p(b.wq),
                bq: p(b.bq),
                wk: p(b.wk),
                bk: p(b.bk),
                wv: p(b.wv),
                bv: p(b.bv),
                wo: p(b.wo),
                bo: p(b.bo),
            },
        )?;
        let mid = g.add(z, attn.output)?;
        let h = g.layer_norm(mid, p(b.ln2_gain), p(b.ln2_shift), eps)?;
        let h = g.linear(h, p(b.mlp_w1), p(b.mlp_b1))?;
        let h = g.gelu(h);
        let h = g.linear(h, p(b.mlp_w2), p(b.mlp_b2))?;
        Ok(g.add(mid, h)?)
    }

    /// Full encoder; returns the pooled `[C]` semantic vector.
    pub fn forward_graph(&self, g: &mut Graph<'_>, pv: &[Var], clip: &AudioClip) -> Result<Var, ModelError> {
        let z = self.tcn_graph(g, pv, clip)?;
        let zl = self.transformer_graph(g, pv, z)?;
        Ok(g.mean_rows(zl)?)
    }

    pub fn tcn_forward(&self, clip: &AudioClip) -> Result<Tensor, ModelError> {
        let mut g = Graph::new();
        let pv = self.bind(&mut g);
        let z = self.tcn_graph(&mut g, &pv, clip)?;
        Ok(g.tensor(z))
    }

    pub fn transformer_forward(&self, z: &Tensor) -> Result<Tensor, ModelError> {
        let mut g = Graph::new();
        let pv = self.bind(&mut g);
        let zv = g.constant(z.clone());
        let out = self.transformer_graph(&mut g, &pv, zv)?;
        Ok(g.tensor(out))
    }

    pub fn encode(&self, clip: &AudioClip) -> Result<SemanticEmbedding, ModelError> {
        let mut g = Graph::new();
        let pv = self.bind(&mut g);
        let pooled = self.forward_graph(&mut g, &pv, clip)?;
        SemanticEmbedding::new(g.value(pooled).to_vec(), self.config.target_kind)
            .map_err(|e| ModelError::Config(format!("{e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::EmbeddingKind;

    fn clip(n: usize, phase: f64) -> AudioClip {
        let s = (0..n).map(|i| 0.5 * libm::sin(i as f64 * 0.013 + phase)).collect();
        AudioClip::new(s, 16_000).unwrap()
    }

    #[test]
    fn param_count_matches_closed_form() {
        for cfg in [Wav2SemConfig::tiny(), {
            let mut c = Wav2SemConfig::tiny();
            c.transformer_layers = 3;
            c.mlp_dim = 96;
            c
        }] {
            let m = Wav2SemModel::new(cfg.clone()).unwrap();
            assert_eq!(m.params().scalar_count(), cfg.param_count());
        }
        // canonical, closed form only: 16·512² + 512·10 conv weights,
        // 12 blocks of (4·512 LN + 4·(512²+512) attn + 2·512·3072 + 3072 + 512)
        let c = Wav2SemConfig::canonical();
        let conv = 512 * 10 + 512 * 512 * (3 * 4 + 2 * 2);
        let block = 4 * 512 + 4 * (512 * 512 + 512) + 2 * 512 * 3072 + 3072 + 512;
        assert_eq!(c.param_count(), conv + 12 * block);
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let a = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(3)).unwrap();
        let b = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(3)).unwrap();
        let c = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn too_short_clip_reports_minimum() {
        let m = Wav2SemModel::new(Wav2SemConfig::tiny()).unwrap();
        assert_eq!(
            m.encode(&clip(29, 0.0)).unwrap_err(),
            ModelError::InputTooShort {
                got: 29,
                required: 30
            }
        );
    }

    #[test]
    fn pool_cases() {
        let single = Tensor::from_slice(&[1, 3], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(
            semantic_pool(&single, EmbeddingKind::Cls).unwrap().values(),
            &[1.0, -2.0, 0.5]
        );
        let two = Tensor::from_slice(&[2, 2], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            semantic_pool(&two, EmbeddingKind::Cls).unwrap().values(),
            &[2.0, 3.0]
        );
        let swapped = Tensor::from_slice(&[2, 2], &[3.0, 4.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            semantic_pool(&swapped, EmbeddingKind::Cls).unwrap(),
            semantic_pool(&two, EmbeddingKind::Cls).unwrap()
        );
    }

    #[test]
    fn encode_is_deterministic_and_sized() {
        let m = Wav2SemModel::new(Wav2SemConfig::tiny()).unwrap();
        let c = clip(800, 0.3);
        let a = m.encode(&c).unwrap();
        assert_eq!(a, m.encode(&c).unwrap());
        assert_eq!(a.dim(), 32);
    }

    #[test]
    fn frozen_model_refuses_mutation() {
        let mut m = Wav2SemModel::new(Wav2SemConfig::tiny()).unwrap();
        let c = clip(400, 0.0);
        let before = m.encode(&c).unwrap();
        m.freeze();
        m.freeze();
        assert!(m.is_frozen());
        assert_eq!(m.params_mut().unwrap_err(), ModelError::Frozen);
        assert_eq!(m.encode(&c).unwrap(), before);
    }
}
