//! Finite-difference checks for every differentiable op, plus the whole
//! tiny encoder under an L1 loss. Shared with the acceptance suite.

use wav2sem_core::numerics::{check_gradients, check_gradients_at, GradCheckOptions, GradCheckReport};
use wav2sem_core::{AudioClip, Graph, NumericsError, Tensor, Var, Wav2SemConfig, Wav2SemModel};

pub const OP_TOLERANCE: f64 = 1e-4;
pub const MODEL_TOLERANCE: f64 = 1e-3;
pub const SEEDS: [u64; 3] = [11, 23, 47];

pub struct Check {
    pub report: GradCheckReport,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error() < self.tolerance
    }
}

type OpResult = Result<Var, NumericsError>;

fn op(
    label: &str,
    shapes: &[&[usize]],
    seed: u64,
    f: impl Fn(&mut Graph<'_>, &[Var]) -> OpResult,
) -> Check {
    op_with(label, shapes, seed, GradCheckOptions::default(), f)
}

fn op_with(
    label: &str,
    shapes: &[&[usize]],
    seed: u64,
    opts: GradCheckOptions,
    f: impl Fn(&mut Graph<'_>, &[Var]) -> OpResult,
) -> Check {
    let report =
        check_gradients(label, f, shapes, seed, opts).unwrap_or_else(|e| panic!("{label}: {e}"));
    Check {
        report,
        tolerance: OP_TOLERANCE,
    }
}

pub fn op_checks(seed: u64) -> Vec<Check> {
    vec![
        op("add", &[&[3, 4], &[3, 4]], seed, |g, v| g.add(v[0], v[1])),
        op("add_row", &[&[3, 4], &[4]], seed, |g, v| g.add_row(v[0], v[1])),
        op("linear", &[&[3, 4], &[4, 5], &[5]], seed, |g, v| g.linear(v[0], v[1], v[2])),
        op("conv1d stride 1", &[&[2, 9], &[3, 2, 3]], seed, |g, v| g.conv1d(v[0], v[1], 1)),
        op("conv1d stride 2", &[&[2, 11], &[3, 2, 4]], seed, |g, v| g.conv1d(v[0], v[1], 2)),
        op("gelu", &[&[4, 5]], seed, |g, v| Ok(g.gelu(v[0]))),
        op("layer_norm", &[&[3, 6], &[6], &[6]], seed, |g, v| {
            g.layer_norm(v[0], v[1], v[2], 1e-5)
        }),
        op("transpose", &[&[3, 5]], seed, |g, v| g.transpose(v[0])),
        op("attention core", &[&[4, 6], &[4, 6], &[4, 6]], seed, |g, v| {
            g.attention(v[0], v[1], v[2], 2)
        }),
        // The key bias shifts every score of a query equally, so its exact
        // gradient is 0 and the difference quotient is pure round-off
        // (~1e-10 here); the larger floor still bounds it absolutely.
        op_with(
            "multi-head self-attention",
            &[&[4, 6], &[6, 6], &[6], &[6, 6], &[6], &[6, 6], &[6], &[6, 6], &[6]],
            seed,
            GradCheckOptions {
                floor: 1e-5,
                ..GradCheckOptions::default()
            },
            |g, v| {
                let p = wav2sem_core::numerics::AttentionVars {
                    wq: v[1],
                    bq: v[2],
                    wk: v[3],
                    bk: v[4],
                    wv: v[5],
                    bv: v[6],
                    wo: v[7],
                    bo: v[8],
                };
                Ok(g.multi_head_self_attention(v[0], 3, &p)?.output)
            },
        ),
        op("mean_rows", &[&[5, 3]], seed, |g, v| g.mean_rows(v[0])),
        op("sum", &[&[2, 3]], seed, |g, v| Ok(g.sum(v[0]))),
        op("weighted_sum", &[&[2, 3]], seed, |g, v| {
            g.weighted_sum(v[0], vec![0.5, -1.0, 2.0, 0.25, 3.0, -0.75])
        }),
        op("l1", &[&[7], &[7]], seed, |g, v| g.l1(v[0], v[1])),
        op("reshape", &[&[2, 6]], seed, |g, v| g.reshape(v[0], &[3, 4])),
    ]
}

fn fixture_clip(seed: u64) -> AudioClip {
    let n = 400;
    let s = (0..n)
        .map(|i| {
            let t = i as f64;
            0.4 * (t * 0.031 + seed as f64).sin() + 0.2 * (t * 0.173).cos()
        })
        .collect();
    AudioClip::new(s, 16_000).unwrap()
}

/// Parameters of the tiny encoder as gradient-checked inputs, a fixed clip
/// and a fixed target.
pub fn model_check(seed: u64) -> Check {
    let model = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(seed)).unwrap();
    let clip = fixture_clip(seed);
    let target = Tensor::vector((0..32).map(|i| ((i as f64) * 0.7 + seed as f64).sin()).collect());
    let inputs: Vec<Tensor> = model.params().tensors().to_vec();
    let f = |g: &mut Graph<'_>, v: &[Var]| -> OpResult {
        let out = model
            .forward_graph(g, v, &clip)
            .map_err(|e| NumericsError::Config(e.to_string()))?;
        let t = g.constant(target.clone());
        g.l1(out, t)
    };
    let opts = GradCheckOptions {
        max_coords_per_input: Some(16),
        ..GradCheckOptions::default()
    };
    let report = check_gradients_at("tiny encoder + L1", f, inputs, seed, opts).unwrap();
    Check {
        report,
        tolerance: MODEL_TOLERANCE,
    }
}

/// Gradient with respect to the TCN output `Z` through positions, every
/// block and the pooled L1 loss.
pub fn transformer_check(seed: u64) -> Check {
    let model = Wav2SemModel::new(Wav2SemConfig::tiny().with_seed(seed)).unwrap();
    let mut rng = wav2sem_core::rng::seeded(seed);
    let z = Tensor::randn(&[5, 32], 1.0, &mut rng);
    let target = Tensor::vector((0..32).map(|i| ((i as f64) * 0.3 - seed as f64).cos()).collect());
    let f = |g: &mut Graph<'_>, v: &[Var]| -> OpResult {
        let pv: Vec<Var> = model.params().tensors().iter().map(|t| g.constant(t.clone())).collect();
        let out = model
            .transformer_graph(g, &pv, v[0])
            .map_err(|e| NumericsError::Config(e.to_string()))?;
        let pooled = g.mean_rows(out)?;
        let t = g.constant(target.clone());
        g.l1(pooled, t)
    };
    let report =
        check_gradients_at("transformer wrt Z + L1", f, vec![z], seed, GradCheckOptions::default()).unwrap();
    Check {
        report,
        tolerance: MODEL_TOLERANCE,
    }
}
