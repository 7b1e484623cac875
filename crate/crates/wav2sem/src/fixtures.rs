//! Seeded synthetic fixtures: a training set sized for the tiny preset, a
//! pronouncing dictionary with a small vocabulary and spoken sentences for
//! the homophone analysis, and a vertex-sequence pair for the metrics.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wav2sem_core::metrics::{RegionMask, VertexSequence};
use wav2sem_core::rng::{derive_seed, normal_vec, seeded, uniform_vec};
use wav2sem_core::{AudioClip, EmbeddingKind, SemanticEmbedding, Wav2SemConfig};

use crate::error::Result;
use crate::io::embedding::write_embedding;
use crate::io::manifest::{record_line, ManifestRecord};
use crate::io::text::{mask_text, write_text};
use crate::io::vertex::write_vertices;
use crate::io::wav::write_wav;

pub const SAMPLE_RATE: u32 = 16_000;
pub const TRAIN_CLIPS: usize = 8;
pub const TRAIN_SAMPLES: usize = 1600;

/// Fixture training run: 8 clips in batches of 4 for 250 epochs, 500
/// optimizer steps. Batch 1 stalls near a tenth of the initial loss.
pub const TRAIN_LEARNING_RATE: f64 = 3e-3;
pub const TRAIN_BATCH: usize = 4;
pub const TRAIN_EPOCHS: usize = 250;

pub const CMUDICT: &str = "\
;;; Fixture pronouncing dictionary.
;;; One entry per line: WORD followed by ARPABET phonemes.
;;; Alternate pronunciations are written WORD(2), WORD(3), ...
;;; Vowels carry stress: 0 none, 1 primary, 2 secondary.
;;; Words sorted alphabetically.
;;; Nine entries below are alternates.
AGAIN  AH0 G EH1 N
AGAIN(2)  AH0 G EY1 N
BAT  B AE1 T
BEAT  B IY1 T
BIT  B IH1 T
CAUGHT  K AA1 T
COT  K AA1 T
DATA  D EY1 T AH0
DATA(2)  D AE1 T AH0
EITHER  IY1 DH ER0
EITHER(2)  AY1 DH ER0
FAN  F AE1 N
FEET  F IY1 T
FIT  F IH1 T
HELLO  HH AH0 L OW1
HELLO(2)  HH EH0 L OW1
LEAD  L IY1 D
LEAD(2)  L EH1 D # the metal
LEAVE  L IY1 V
LIVE  L IH1 V
LIVE(2)  L AY1 V
MEAT  M IY1 T
MEET  M IY1 T
PAT  P AE1 T
PEAK  P IY1 K
PEEK  P IY1 K
PICK  P IH1 K
READ  R IY1 D
READ(2)  R EH1 D
RED  R EH1 D
ROUTE  R UW1 T
ROUTE(2)  R AW1 T
SAY  S EY1
SEAT  S IY1 T
SHEEP  SH IY1 P
SHIP  SH IH1 P
SIT  S IH1 T
SLEEP  S L IY1 P
SLIP  S L IH1 P
TOMATO  T AH0 M EY1 T OW2
TOMATO(2)  T AH0 M AA1 T OW2
VAN  V AE1 N
WEAK  W IY1 K
WEEK  W IY1 K
";

pub const CMUDICT_ENTRIES: usize = 44;

pub const VOCAB: [&str; 12] = [
    "SHEEP", "SHIP", "SEAT", "SIT", "BEAT", "BIT", "PAT", "BAT", "MEAT", "MEET", "FAN", "VAN",
];

/// Layout of the analysis sentences: context, margin, the shared word,
/// margin, context. Every boundary is a multiple of the tiny hop (20).
const CONTEXT: usize = 800;
const MARGIN: usize = 200;
const WORD: usize = 1600;
pub const WORD_START_S: f64 = (CONTEXT + MARGIN) as f64 / SAMPLE_RATE as f64;
pub const WORD_END_S: f64 = (CONTEXT + MARGIN + WORD) as f64 / SAMPLE_RATE as f64;

pub const VERTEX_FRAMES: usize = 30;
pub const VERTEX_COUNT: usize = 40;
pub const VERTEX_FPS: f32 = 30.0;

/// Paths of everything `export` writes, relative to its root.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub root: PathBuf,
    pub tiny_config: PathBuf,
    pub train_manifest: PathBuf,
    pub cmudict: PathBuf,
    pub vocab: PathBuf,
    pub analysis_manifest: PathBuf,
    pub gt: PathBuf,
    pub pred: PathBuf,
    pub lip_mask: PathBuf,
    pub upper_mask: PathBuf,
}

impl FixturePaths {
    pub fn under(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            tiny_config: root.join("tiny.toml"),
            train_manifest: root.join("train/manifest.jsonl"),
            cmudict: root.join("analysis/cmudict.txt"),
            vocab: root.join("analysis/vocab.txt"),
            analysis_manifest: root.join("analysis/manifest.jsonl"),
            gt: root.join("eval/gt.vtx"),
            pred: root.join("eval/pred.vtx"),
            lip_mask: root.join("eval/lip.mask"),
            upper_mask: root.join("eval/upper.mask"),
        }
    }
}

/// Deterministic stand-in for a text-model sentence vector: uniform in
/// [-0.5, 0.5), seeded by the SHA-256 of the transcript.
pub fn hashed_embedding(transcript: &str, dim: usize) -> SemanticEmbedding {
    let digest = Sha256::digest(transcript.as_bytes());
    let seed = u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"));
    SemanticEmbedding::new(uniform_vec(&mut seeded(seed), dim, -0.5, 0.5), EmbeddingKind::Cls)
        .expect("finite, non-empty")
}

/// Training clip `k`: an enveloped tone plus a weaker inharmonic partial.
pub fn train_waveform(k: usize) -> Vec<f64> {
    let kf = k as f64;
    let amp = 0.2 + 0.08 * kf;
    let f0 = 120.0 + 35.0 * kf;
    (0..TRAIN_SAMPLES)
        .map(|i| {
            let t = i as f64 / SAMPLE_RATE as f64;
            let env = 0.5 + 0.5 * (2.0 * PI * (3.0 + kf) * t).sin();
            amp * env * (2.0 * PI * f0 * t).sin() + 0.1 * (2.0 * PI * 2.7 * f0 * t).sin()
        })
        .collect()
}

pub fn train_transcript(k: usize) -> String {
    const WORDS: [&str; TRAIN_CLIPS] = ["amber", "birch", "cedar", "delta", "ember", "fjord", "grove", "harbor"];
    format!("the {} sample number {k}", WORDS[k])
}

fn tones(rng_seed: u64, len: usize, amp: f64) -> Vec<f64> {
    let mut rng = seeded(rng_seed);
    let freqs = uniform_vec(&mut rng, 3, 150.0, 2500.0);
    let phases = uniform_vec(&mut rng, 3, 0.0, 2.0 * PI);
    let noise = normal_vec(&mut rng, len, 0.02);
    (0..len)
        .map(|i| {
            let t = i as f64 / SAMPLE_RATE as f64;
            let s: f64 = freqs.iter().zip(&phases).map(|(f, p)| (2.0 * PI * f * t + p).sin()).sum();
            amp * s / 3.0 + noise[i]
        })
        .collect()
}

/// Sentence for vocabulary word `j`: distinct context on both sides of a
/// word segment and margins shared by every sentence. The margins exceed
/// the tiny receptive field, so frames centered in the word see only shared
/// audio and raw word features coincide across sentences.
pub fn analysis_waveform(seed: u64, j: usize) -> Vec<f64> {
    let word = tones(derive_seed(seed, 10), WORD, 0.4);
    let margin = tones(derive_seed(seed, 11), MARGIN, 0.1);
    let before = tones(derive_seed(seed, 100 + 2 * j as u64), CONTEXT, 0.3);
    let after = tones(derive_seed(seed, 101 + 2 * j as u64), CONTEXT, 0.3);
    [before, margin.clone(), word, margin, after].concat()
}

pub fn analysis_transcript(word: &str) -> String {
    format!("say {} again", word.to_lowercase())
}

/// Ground truth drifts smoothly around a seeded face; the prediction adds
/// seeded noise.
pub fn vertex_pair(seed: u64) -> (VertexSequence, VertexSequence) {
    let mut rng = seeded(derive_seed(seed, 20));
    let base = normal_vec(&mut rng, VERTEX_COUNT * 3, 0.1);
    let mut gt = Vec::with_capacity(VERTEX_FRAMES * VERTEX_COUNT * 3);
    for t in 0..VERTEX_FRAMES {
        let phase = 2.0 * PI * t as f64 / VERTEX_FRAMES as f64;
        for (i, b) in base.iter().enumerate() {
            gt.push(b + 0.005 * (phase + i as f64).sin());
        }
    }
    let pred: Vec<f64> = gt
        .iter()
        .zip(normal_vec(&mut rng, gt.len(), 0.002))
        .map(|(g, n)| g + n)
        .collect();
    (
        VertexSequence::new(VERTEX_FRAMES, VERTEX_COUNT, VERTEX_FPS, gt).expect("valid shape"),
        VertexSequence::new(VERTEX_FRAMES, VERTEX_COUNT, VERTEX_FPS, pred).expect("valid shape"),
    )
}

pub fn lip_mask() -> RegionMask {
    RegionMask::new("lip", (0..12).collect()).expect("non-empty")
}

pub fn upper_mask() -> RegionMask {
    RegionMask::new("upper", (24..VERTEX_COUNT).collect()).expect("non-empty")
}

fn clip(samples: Vec<f64>) -> AudioClip {
    AudioClip::new(samples, SAMPLE_RATE).expect("finite samples")
}

/// Writes every fixture under `root`.
pub fn export(root: &Path, seed: u64) -> Result<FixturePaths> {
    let paths = FixturePaths::under(root);
    let dim = Wav2SemConfig::tiny().model_dim;

    let config = format!(
        "preset = \"tiny\"\nseed = {seed}\nepochs = {TRAIN_EPOCHS}\nlearning_rate = {TRAIN_LEARNING_RATE:?}\n\
         batch_size = {TRAIN_BATCH}\ncheckpoint_every = 250\nshuffle = false\n"
    );
    write_text(&paths.tiny_config, &config)?;

    let train_dir = root.join("train");
    let mut manifest = String::new();
    for k in 0..TRAIN_CLIPS {
        let transcript = train_transcript(k);
        let (wav, emb) = (format!("clip_{k}.wav"), format!("clip_{k}.emb"));
        write_wav(&train_dir.join(&wav), &clip(train_waveform(k)))?;
        write_embedding(&train_dir.join(&emb), &hashed_embedding(&transcript, dim))?;
        manifest.push_str(&record_line(&ManifestRecord {
            audio_path: wav,
            embedding_path: emb,
            transcript,
            words: None,
        }));
        manifest.push('\n');
    }
    write_text(&paths.train_manifest, &manifest)?;

    let analysis_dir = root.join("analysis");
    write_text(&paths.cmudict, CMUDICT)?;
    write_text(&paths.vocab, &format!("# fixture vocabulary\n{}\n", VOCAB.join("\n")))?;
    let mut manifest = String::new();
    for (j, word) in VOCAB.iter().enumerate() {
        let transcript = analysis_transcript(word);
        let stem = format!("sentence_{j:02}");
        let (wav, emb) = (format!("{stem}.wav"), format!("{stem}.emb"));
        write_wav(&analysis_dir.join(&wav), &clip(analysis_waveform(seed, j)))?;
        write_embedding(&analysis_dir.join(&emb), &hashed_embedding(&transcript, dim))?;
        manifest.push_str(&record_line(&ManifestRecord {
            audio_path: wav,
            embedding_path: emb,
            transcript,
            words: Some(vec![
                ("SAY".into(), 0.0, CONTEXT as f64 / SAMPLE_RATE as f64),
                (word.to_string(), WORD_START_S, WORD_END_S),
            ]),
        }));
        manifest.push('\n');
    }
    write_text(&paths.analysis_manifest, &manifest)?;

    let (gt, pred) = vertex_pair(seed);
    write_vertices(&paths.gt, &gt)?;
    write_vertices(&paths.pred, &pred)?;
    write_text(&paths.lip_mask, &mask_text(&lip_mask()))?;
    write_text(&paths.upper_mask, &mask_text(&upper_mask()))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wav2sem_core::analysis::parse_cmudict;

    #[test]
    fn dictionary_shape() {
        assert_eq!(CMUDICT.lines().count(), 50);
        let entries = parse_cmudict(CMUDICT).unwrap();
        assert_eq!(entries.len(), CMUDICT_ENTRIES);
        assert_eq!(entries.iter().filter(|e| e.variant == 2).count(), 9);
        for w in VOCAB {
            assert!(entries.iter().any(|e| e.word == w), "{w}");
        }
    }

    #[test]
    fn word_span_is_hop_aligned() {
        let hop = Wav2SemConfig::tiny().hop();
        assert_eq!((CONTEXT + MARGIN) % hop, 0);
        assert!(MARGIN >= Wav2SemConfig::tiny().min_samples());
    }

    #[test]
    fn hashed_embeddings_are_stable_and_distinct() {
        let a = hashed_embedding("sheep", 4);
        assert_eq!(a, hashed_embedding("sheep", 4));
        assert_ne!(a, hashed_embedding("ship", 4));
        assert!(a.values().iter().all(|v| (-0.5..0.5).contains(v)));
    }
}
