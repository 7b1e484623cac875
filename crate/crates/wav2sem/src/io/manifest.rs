//! One JSON object per line:
//! `{"audio_path", "embedding_path", "transcript", "words": [[w, start, end], ...]}`.
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wav2sem_core::{AudioClip, SemanticEmbedding};

use super::embedding::read_embedding;
use super::wav::read_wav;
use crate::error::{read_text, Error, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub audio_path: String,
    pub embedding_path: String,
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<(String, f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordSpan {
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// 1-based line in the manifest file.
    pub line: usize,
    pub audio_path: PathBuf,
    pub embedding_path: PathBuf,
    pub transcript: String,
    pub words: Vec<WordSpan>,
}

fn validate_words(words: &[(String, f64, f64)]) -> Result<Vec<WordSpan>, String> {
    let mut out: Vec<WordSpan> = Vec::with_capacity(words.len());
    for (i, (word, start, end)) in words.iter().enumerate() {
        if word.trim().is_empty() {
            return Err(format!("words[{i}]: empty word"));
        }
        if !start.is_finite() || !end.is_finite() || *start < 0.0 {
            return Err(format!("words[{i}] ({word}): span must be finite and start >= 0"));
        }
        if end <= start {
            return Err(format!("words[{i}] ({word}): end {end} is not after start {start}"));
        }
        if let Some(prev) = out.last() {
            if *start < prev.end_s {
                return Err(format!(
                    "words[{i}] ({word}): starts at {start}, before {} ends at {}",
                    prev.word, prev.end_s
                ));
            }
        }
        out.push(WordSpan {
            word: word.trim().to_uppercase(),
            start_s: *start,
            end_s: *end,
        });
    }
    Ok(out)
}

/// Parses manifest text; `base` resolves relative paths. Any bad line fails
/// the whole parse.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(raw).map_err(|e| ManifestError {
            line,
            message: e.to_string(),
        })?;
        for (field, value) in [("audio_path", &rec.audio_path), ("embedding_path", &rec.embedding_path)] {
            if value.is_empty() {
                return Err(ManifestError {
                    line,
                    message: format!("{field} is empty"),
                });
            }
        }
        let words = validate_words(rec.words.as_deref().unwrap_or(&[]))
            .map_err(|message| ManifestError { line, message })?;
        out.push(ManifestEntry {
            line,
            audio_path: base.join(&rec.audio_path),
            embedding_path: base.join(&rec.embedding_path),
            transcript: rec.transcript,
            words,
        });
    }
    Ok(out)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base).map_err(|source| Error::Manifest {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads every clip and target; word spans must lie inside their clip.
pub fn load_dataset(manifest: &Path, entries: &[ManifestEntry]) -> Result<Vec<(AudioClip, SemanticEmbedding)>> {
    entries
        .iter()
        .map(|e| {
            let clip = read_wav(&e.audio_path)?;
            if let Some(w) = e.words.iter().find(|w| w.end_s > clip.duration_s()) {
                return Err(Error::Manifest {
                    path: manifest.to_path_buf(),
                    source: ManifestError {
                        line: e.line,
                        message: format!(
                            "word {} ends at {} s, past the clip duration {} s",
                            w.word,
                            w.end_s,
                            clip.duration_s()
                        ),
                    },
                });
            }
            Ok((clip, read_embedding(&e.embedding_path)?))
        })
        .collect()
}

pub fn record_line(rec: &ManifestRecord) -> String {
    serde_json::to_string(rec).expect("manifest records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"{"audio_path": "a.wav", "embedding_path": "a.emb", "transcript": "she sells"}
{"audio_path": "b.wav", "embedding_path": "b.emb", "transcript": "sheep", "words": [["sheep", 0.1, 0.4]]}
"#;

    #[test]
    fn two_lines_two_entries() {
        let m = parse_manifest(TWO, Path::new("/data")).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].audio_path, Path::new("/data/a.wav"));
        assert_eq!(m[1].words[0].word, "SHEEP");
        assert_eq!(m[1].line, 2);
    }

    #[test]
    fn missing_field_names_line_and_field() {
        let text = format!("{}\n{{\"audio_path\": \"x.wav\", \"transcript\": \"t\"}}\n", TWO.lines().next().unwrap());
        let e = parse_manifest(&text, Path::new("")).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("embedding_path"), "{}", e.message);
    }

    #[test]
    fn span_errors() {
        let bad = r#"{"audio_path": "a", "embedding_path": "b", "transcript": "", "words": [["x", 0.5, 0.2]]}"#;
        let e = parse_manifest(bad, Path::new("")).unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("not after"));
        let overlap = r#"{"audio_path": "a", "embedding_path": "b", "transcript": "", "words": [["x", 0.0, 0.3], ["y", 0.2, 0.4]]}"#;
        assert!(parse_manifest(overlap, Path::new("")).is_err());
        let unknown = r#"{"audio_path": "a", "embedding_path": "b", "transcript": "", "extra": 1}"#;
        assert!(parse_manifest(unknown, Path::new("")).is_err());
    }

    #[test]
    fn record_round_trip() {
        let rec = ManifestRecord {
            audio_path: "a.wav".into(),
            embedding_path: "a.emb".into(),
            transcript: "ship".into(),
            words: Some(vec![("ship".into(), 0.0, 0.25)]),
        };
        let m = parse_manifest(&record_line(&rec), Path::new("")).unwrap();
        assert_eq!(m[0].words[0].end_s, 0.25);
    }
}
