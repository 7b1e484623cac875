//! Central finite-difference verification of reverse-mode gradients.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample;

use super::{Graph, NumericsError, Tensor, Var};
use crate::rng::{normal_vec, seeded};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Finite-difference half step.
    pub step: f64,
    /// Check at most this many coordinates per input (seeded sample).
    pub max_coords_per_input: Option<usize>,
    /// Denominator floor in `|a − n| / max(|a|, |n|, floor)`.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_coords_per_input: None,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputReport {
    pub index: usize,
    pub shape: Vec<usize>,
    pub coords_checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub label: String,
    pub inputs: Vec<InputReport>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.inputs
            .iter()
            .map(|r| r.max_rel_error)
            .fold(0.0, f64::max)
    }
}

fn evaluate<F>(op: &F, inputs: &[Tensor], projection: &Option<Vec<f64>>) -> Result<f64, NumericsError>
where
    F: Fn(&mut Graph<'_>, &[Var]) -> Result<Var, NumericsError>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let out = op(&mut g, &vars)?;
    Ok(match projection {
        Some(w) => g.value(out).iter().zip(w).map(|(a, b)| a * b).sum(),
        None => g.value(out)[0],
    })
}

/// Checks `op` at standard-normal inputs of the given shapes drawn from `seed`.
pub fn check_gradients<F>(
    label: &str,
    op: F,
    input_shapes: &[&[usize]],
    seed: u64,
    opts: GradCheckOptions,
) -> Result<GradCheckReport, NumericsError>
where
    F: Fn(&mut Graph<'_>, &[Var]) -> Result<Var, NumericsError>,
{
    let mut rng = seeded(seed);
    let inputs = input_shapes
        .iter()
        .map(|s| {
            let n = s.iter().product();
            Tensor::new(s.to_vec(), normal_vec(&mut rng, n, 1.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_gradients_at(label, op, inputs, seed, opts)
}

/// Checks `op` at the given input point. Non-scalar outputs are reduced by
/// a seeded random projection so the whole Jacobian participates.
pub fn check_gradients_at<F>(
    label: &str,
    op: F,
    inputs: Vec<Tensor>,
    seed: u64,
    opts: GradCheckOptions,
) -> Result<GradCheckReport, NumericsError>
where
    F: Fn(&mut Graph<'_>, &[Var]) -> Result<Var, NumericsError>,
{
    let mut rng = seeded(seed ^ 0x005E_ED0F_F1D1);
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let out = op(&mut g, &vars)?;
    let out_len = g.value(out).len();
    let projection = (out_len != 1).then(|| normal_vec(&mut rng, out_len, 1.0));
    let loss = match &projection {
        Some(w) => g.weighted_sum(out, w.clone())?,
        None => out,
    };
    let mut grads = g.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(&inputs)
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| alloc::vec![0.0; t.numel()]))
        .collect();
    drop(g);
    if analytic.iter().flatten().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite {
            op: label.to_string(),
        });
    }

    let mut point = inputs;
    let mut reports = Vec::with_capacity(point.len());
    for idx in 0..point.len() {
        let n = point[idx].numel();
        let coords: Vec<usize> = match opts.max_coords_per_input {
            Some(m) if m < n => {
                let mut c = sample(&mut rng, n, m).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..n).collect(),
        };
        let mut worst: f64 = 0.0;
        for &c in &coords {
            let orig = point[idx].data()[c];
            point[idx].data_mut()[c] = orig + opts.step;
            let plus = evaluate(&op, &point, &projection)?;
            point[idx].data_mut()[c] = orig - opts.step;
            let minus = evaluate(&op, &point, &projection)?;
            point[idx].data_mut()[c] = orig;
            let numeric = (plus - minus) / (2.0 * opts.step);
            if !numeric.is_finite() {
                return Err(NumericsError::NonFinite {
                    op: label.to_string(),
                });
            }
            let a = analytic[idx][c];
            let denom = a.abs().max(numeric.abs()).max(opts.floor);
            worst = worst.max((a - numeric).abs() / denom);
        }
        reports.push(InputReport {
            index: idx,
            shape: point[idx].shape().to_vec(),
            coords_checked: coords.len(),
            max_rel_error: worst,
        });
    }
    Ok(GradCheckReport {
        label: label.to_string(),
        inputs: reports,
    })
}
