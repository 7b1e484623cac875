//! In-memory audio clips and sentence embeddings.

use alloc::vec::Vec;

pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AudioError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} = {value} lies outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("span [{start_s}, {end_s}] s is not within (0..{duration_s}] s with start < end")]
    SpanOutOfRange {
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },
    #[error("embedding must have at least one value")]
    EmptyEmbedding,
    #[error("embedding value {index} is not finite")]
    NonFiniteEmbedding { index: usize },
}

/// Mono waveform, samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(-1.0..=1.0).contains(*v))
        {
            return Err(AudioError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sample-accurate slice `[floor(start·sr), ceil(end·sr))`.
    pub fn crop(&self, start_s: f64, end_s: f64) -> Result<AudioClip, AudioError> {
        let duration_s = self.duration_s();
        if !(start_s >= 0.0 && start_s < end_s && end_s <= duration_s) {
            return Err(AudioError::SpanOutOfRange {
                start_s,
                end_s,
                duration_s,
            });
        }
        let sr = self.sample_rate as f64;
        let a = libm::floor(start_s * sr) as usize;
        let b = (libm::ceil(end_s * sr) as usize).min(self.samples.len());
        Ok(AudioClip {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingKind {
    /// Sentence classification-token vector.
    Cls,
    /// Mean of token vectors.
    Mean,
}

/// Fixed-dimension sentence-level vector (target or prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticEmbedding {
    values: Vec<f64>,
    kind: EmbeddingKind,
}

impl SemanticEmbedding {
    pub fn new(values: Vec<f64>, kind: EmbeddingKind) -> Result<Self, AudioError> {
        if values.is_empty() {
            return Err(AudioError::EmptyEmbedding);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(AudioError::NonFiniteEmbedding { index });
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn second() -> AudioClip {
        let s = (0..16_000).map(|i| ((i as f64) * 0.01).sin() * 0.5).collect();
        AudioClip::new(s, 16_000).unwrap()
    }

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(matches!(
            AudioClip::new(vec![0.0, 1.5], 16_000),
            Err(AudioError::SampleOutOfRange { index: 1, .. })
        ));
        assert_eq!(AudioClip::new(vec![], 0), Err(AudioError::ZeroSampleRate));
    }

    #[test]
    fn crop_full_span_is_identity() {
        let c = second();
        assert_eq!(c.crop(0.0, c.duration_s()).unwrap(), c);
    }

    #[test]
    fn crop_quarter_second() {
        let c = second();
        let q = c.crop(0.25, 0.5).unwrap();
        assert_eq!(q.len(), 4000);
        assert_eq!(q.sample_rate(), 16_000);
        assert_eq!(q.samples()[0], c.samples()[4000]);
    }

    #[test]
    fn crop_rejects_empty_and_outside_spans() {
        let c = second();
        assert!(c.crop(0.3, 0.3).is_err());
        assert!(c.crop(-0.1, 0.3).is_err());
        assert!(c.crop(0.5, 1.01).is_err());
    }

    #[test]
    fn embedding_validation() {
        assert!(SemanticEmbedding::new(vec![], EmbeddingKind::Cls).is_err());
        assert_eq!(
            SemanticEmbedding::new(vec![1.0, f64::NAN], EmbeddingKind::Mean),
            Err(AudioError::NonFiniteEmbedding { index: 1 })
        );
        let e = SemanticEmbedding::new(vec![1.0, 0.0, -1.0], EmbeddingKind::Cls).unwrap();
        assert_eq!(e.dim(), 3);
    }
}
