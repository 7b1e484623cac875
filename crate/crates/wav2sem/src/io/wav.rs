//! RIFF/WAVE, PCM 16-bit mono only.

use std::path::Path;

use wav2sem_core::{AudioClip, AudioError};

use crate::error::{read_bytes, write_bytes, Error, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file ({0} magic missing)")]
    Magic(&'static str),
    #[error("unsupported {field} {value}; only {expected} is accepted")]
    Unsupported {
        field: &'static str,
        value: u32,
        expected: &'static str,
    },
    #[error("no {0} chunk")]
    MissingChunk(&'static str),
    #[error("truncated {what}: declared {declared} bytes, {available} present")]
    Truncated {
        what: &'static str,
        declared: usize,
        available: usize,
    },
    #[error("malformed fmt chunk ({0} bytes)")]
    FmtSize(usize),
    #[error("data chunk has odd length {0}")]
    OddData(usize),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

fn u16_at(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return Err(WavError::Magic("RIFF"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::Magic("WAVE"));
    }
    let mut pos = 12;
    let mut sample_rate = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        match id {
            b"fmt " => {
                if available < size {
                    return Err(WavError::Truncated {
                        what: "fmt chunk",
                        declared: size,
                        available,
                    });
                }
                if size < 16 {
                    return Err(WavError::FmtSize(size));
                }
                let f = &bytes[body_start..body_start + size];
                let format = u16_at(f, 0);
                if format != 1 {
                    return Err(WavError::Unsupported {
                        field: "audio format",
                        value: format.into(),
                        expected: "1 (PCM)",
                    });
                }
                let channels = u16_at(f, 2);
                if channels != 1 {
                    return Err(WavError::Unsupported {
                        field: "channel count",
                        value: channels.into(),
                        expected: "1 (mono)",
                    });
                }
                let bits = u16_at(f, 14);
                if bits != 16 {
                    return Err(WavError::Unsupported {
                        field: "bit depth",
                        value: bits.into(),
                        expected: "16",
                    });
                }
                let rate = u32_at(f, 4);
                if rate == 0 {
                    return Err(WavError::Unsupported {
                        field: "sample rate",
                        value: 0,
                        expected: "a positive rate",
                    });
                }
                sample_rate = Some(rate);
            }
            b"data" => {
                let rate = sample_rate.ok_or(WavError::MissingChunk("fmt (before data)"))?;
                if available < size {
                    return Err(WavError::Truncated {
                        what: "data chunk",
                        declared: size,
                        available,
                    });
                }
                if !size.is_multiple_of(2) {
                    return Err(WavError::OddData(size));
                }
                let samples = bytes[body_start..body_start + size]
                    .chunks_exact(2)
                    .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
                    .collect();
                return Ok(AudioClip::new(samples, rate)?);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    Err(WavError::MissingChunk(if sample_rate.is_some() {
        "data"
    } else {
        "fmt"
    }))
}

/// Quantizes with `round(x · 32768)` clamped to the i16 range.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    parse_wav(&read_bytes(path)?).map_err(|source| Error::Wav {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    write_bytes(path, &encode_wav(clip))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(format: u16, channels: u16, bits: u16, data: &[i16]) -> Vec<u8> {
        let clip = AudioClip::new(vec![0.0; data.len()], 16_000).unwrap();
        let mut b = encode_wav(&clip);
        b[20..22].copy_from_slice(&format.to_le_bytes());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        for (i, s) in data.iter().enumerate() {
            b[44 + 2 * i..46 + 2 * i].copy_from_slice(&s.to_le_bytes());
        }
        b
    }

    #[test]
    fn scales_by_32768() {
        let clip = parse_wav(&header(1, 1, 16, &[0, 16384, -32768])).unwrap();
        assert_eq!(clip.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(clip.sample_rate(), 16_000);
    }

    #[test]
    fn empty_data_is_valid() {
        let clip = parse_wav(&header(1, 1, 16, &[])).unwrap();
        assert!(clip.is_empty());
    }

    #[test]
    fn rejects_each_field() {
        let err = |b: Vec<u8>| parse_wav(&b).unwrap_err();
        assert!(matches!(
            err(header(1, 2, 16, &[0])),
            WavError::Unsupported { field: "channel count", value: 2, .. }
        ));
        assert!(matches!(
            err(header(3, 1, 16, &[0])),
            WavError::Unsupported { field: "audio format", value: 3, .. }
        ));
        assert!(matches!(
            err(header(1, 1, 24, &[0])),
            WavError::Unsupported { field: "bit depth", value: 24, .. }
        ));
        let mut b = header(1, 1, 16, &[0]);
        b[0] = b'X';
        assert_eq!(err(b), WavError::Magic("RIFF"));
        let mut b = header(1, 1, 16, &[0, 1, 2]);
        b.truncate(b.len() - 1);
        assert!(matches!(err(b), WavError::Truncated { what: "data chunk", .. }));
        assert_eq!(err(header(1, 1, 16, &[])[..36].to_vec()), WavError::MissingChunk("data"));
    }

    #[test]
    fn skips_unknown_chunks() {
        let mut b = header(1, 1, 16, &[100]);
        let mut extra = b"LIST".to_vec();
        extra.extend_from_slice(&3u32.to_le_bytes());
        extra.extend_from_slice(&[1, 2, 3, 0]);
        b.splice(36..36, extra);
        assert_eq!(parse_wav(&b).unwrap().samples(), &[100.0 / 32768.0]);
    }

    #[test]
    fn round_trip_is_lossless_for_16_bit_values() {
        let samples: Vec<f64> = (-40..40).map(|i| f64::from(i * 800) / 32768.0).collect();
        let clip = AudioClip::new(samples, 22_050).unwrap();
        assert_eq!(parse_wav(&encode_wav(&clip)).unwrap(), clip);
    }
}
