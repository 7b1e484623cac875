//! Vertex-sequence error metrics for talking-face evaluation.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("vertex sequence needs T >= 1 and V >= 1, got T={frames}, V={vertices}")]
    EmptySequence { frames: usize, vertices: usize },
    #[error("expected {expected} position values, got {got}")]
    DataLength { expected: usize, got: usize },
    #[error("vertex positions must be finite")]
    NonFinite,
    #[error("fps must be positive and finite")]
    Fps,
    #[error("shape mismatch: ground truth is {gt:?}, prediction is {pred:?} (T, V)")]
    ShapeMismatch {
        gt: (usize, usize),
        pred: (usize, usize),
    },
    #[error("region mask {name:?} is empty")]
    EmptyMask { name: String },
    #[error("region mask {name:?} has index {index} outside [0, {vertices})")]
    MaskOutOfRange {
        name: String,
        index: usize,
        vertices: usize,
    },
    #[error("temporal dynamics need at least 2 frames, got {0}")]
    InsufficientFrames(usize),
}

/// `T × V × 3` positions, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSequence {
    frames: usize,
    vertices: usize,
    fps: f32,
    positions: Vec<f64>,
}

impl VertexSequence {
    pub fn new(
        frames: usize,
        vertices: usize,
        fps: f32,
        positions: Vec<f64>,
    ) -> Result<Self, MetricsError> {
        if frames == 0 || vertices == 0 {
            return Err(MetricsError::EmptySequence { frames, vertices });
        }
        let expected = frames * vertices * 3;
        if positions.len() != expected {
            return Err(MetricsError::DataLength {
                expected,
                got: positions.len(),
            });
        }
        if fps.is_nan() || fps <= 0.0 || fps.is_infinite() {
            return Err(MetricsError::Fps);
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        Ok(Self {
            frames,
            vertices,
            fps,
            positions,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn fps(&self) -> f32 {
        self.fps
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn vertex(&self, t: usize, v: usize) -> [f64; 3] {
        let o = (t * self.vertices + v) * 3;
        [self.positions[o], self.positions[o + 1], self.positions[o + 2]]
    }

    /// Same shape with every position mapped through `f`.
    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self, MetricsError> {
        let positions = self
            .positions
            .chunks_exact(3)
            .flat_map(|p| f([p[0], p[1], p[2]]))
            .collect();
        Self::new(self.frames, self.vertices, self.fps, positions)
    }
}

/// Named vertex subset, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    name: String,
    indices: Vec<usize>,
}

impl RegionMask {
    pub fn new(name: impl Into<String>, mut indices: Vec<usize>) -> Result<Self, MetricsError> {
        let name = name.into();
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(MetricsError::EmptyMask { name });
        }
        Ok(Self { name, indices })
    }

    pub fn all(name: impl Into<String>, vertices: usize) -> Result<Self, MetricsError> {
        Self::new(name, (0..vertices).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn check(&self, vertices: usize) -> Result<(), MetricsError> {
        match self.indices.last() {
            Some(&max) if max >= vertices => Err(MetricsError::MaskOutOfRange {
                name: self.name.clone(),
                index: max,
                vertices,
            }),
            _ => Ok(()),
        }
    }
}

fn check_shapes(gt: &VertexSequence, pred: &VertexSequence) -> Result<(), MetricsError> {
    if gt.frames != pred.frames || gt.vertices != pred.vertices {
        return Err(MetricsError::ShapeMismatch {
            gt: (gt.frames, gt.vertices),
            pred: (pred.frames, pred.vertices),
        });
    }
    Ok(())
}

/// Mean over frames of the L2 norm of the flattened difference on `idx`.
fn region_error(gt: &VertexSequence, pred: &VertexSequence, idx: &[usize]) -> f64 {
    let mut total = 0.0;
    for t in 0..gt.frames {
        let base = t * gt.vertices * 3;
        let mut sq = 0.0;
        for &v in idx {
            let o = base + v * 3;
            for k in 0..3 {
                let d = gt.positions[o + k] - pred.positions[o + k];
                sq += d * d;
            }
        }
        total += libm::sqrt(sq);
    }
    total / gt.frames as f64
}

/// Lip vertex error.
pub fn lve(gt: &VertexSequence, pred: &VertexSequence, lip: &RegionMask) -> Result<f64, MetricsError> {
    check_shapes(gt, pred)?;
    lip.check(gt.vertices)?;
    Ok(region_error(gt, pred, &lip.indices))
}

/// Mean vertex error over the whole face.
pub fn mve(gt: &VertexSequence, pred: &VertexSequence) -> Result<f64, MetricsError> {
    check_shapes(gt, pred)?;
    let all: Vec<usize> = (0..gt.vertices).collect();
    Ok(region_error(gt, pred, &all))
}

/// Population std over time of `‖x[t, v]‖₂`.
fn dynamics(x: &VertexSequence, v: usize) -> f64 {
    let t_n = x.frames as f64;
    let norms: Vec<f64> = (0..x.frames)
        .map(|t| {
            let p = x.vertex(t, v);
            libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
        })
        .collect();
    let mean = norms.iter().sum::<f64>() / t_n;
    let var = norms.iter().map(|n| (n - mean) * (n - mean)).sum::<f64>() / t_n;
    libm::sqrt(var)
}

/// Upper-face dynamics deviation, signed: positive when the ground truth
/// moves more than the prediction.
pub fn fdd(gt: &VertexSequence, pred: &VertexSequence, upper: &RegionMask) -> Result<f64, MetricsError> {
    check_shapes(gt, pred)?;
    upper.check(gt.vertices)?;
    if gt.frames < 2 {
        return Err(MetricsError::InsufficientFrames(gt.frames));
    }
    let sum: f64 = upper
        .indices
        .iter()
        .map(|&v| dynamics(gt, v) - dynamics(pred, v))
        .sum();
    Ok(sum / upper.len() as f64)
}
