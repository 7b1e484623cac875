//! Command implementations. Each writes its outputs plus a
//! `resolved_config.toml` into the output directory and returns a summary;
//! printing is left to the caller.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use wav2sem_core::analysis::{
    decoupling_report, mine_pairs, parse_cmudict, project_2d, render_text, restrict_to_vocab, Curation,
    DecouplingReport, Edit, NearHomophonePair, SimilarityTable,
};
use wav2sem_core::fusion::{word_feature, FrameEncoder};
use wav2sem_core::metrics::{fdd, lve, mve};
use wav2sem_core::numerics::AdamState;
use wav2sem_core::training::{train_with, CheckpointKind, TrainLog, TrainObserver, Trainer};
use wav2sem_core::{FusionHead, PhonemeEncoder, SemanticEmbedding, Tensor, Wav2SemConfig, Wav2SemModel};

use crate::config::{fusion_seeds, ResolvedTrain};
use crate::error::{read_text, Error, Result};
use crate::io::checkpoint::{encode_checkpoint, read_checkpoint};
use crate::io::embedding::write_embedding;
use crate::io::frames::{read_frames, write_frames};
use crate::io::manifest::{load_dataset, load_manifest};
use crate::io::text::{read_mask, read_vocab, train_log_text, write_text};
use crate::io::vertex::read_vertices;
use crate::io::wav::read_wav;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_resolved<T: Serialize>(out: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Usage(format!("cannot record config: {e}")))?;
    write_text(&out.join(RESOLVED_CONFIG), &text)
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

/// Output file stem for an input path; two inputs may not share one.
fn unique_stems(paths: &[PathBuf]) -> Result<Vec<(&Path, String)>> {
    let mut seen = BTreeSet::new();
    paths
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Usage(format!("{}: no file name", p.display())))?;
            if !seen.insert(stem.clone()) {
                return Err(Error::Usage(format!("two inputs share the file stem {stem:?}")));
            }
            Ok((p.as_path(), stem))
        })
        .collect()
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub log: TrainLog,
    pub final_checkpoint: PathBuf,
    pub final_sha256: String,
}

impl TrainSummary {
    pub fn initial_loss(&self) -> Option<f64> {
        self.log.records.first().map(|r| r.loss)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.log.records.last().map(|r| r.loss)
    }
}

struct CheckpointWriter<'a> {
    dir: &'a Path,
    final_digest: Option<String>,
}

impl CheckpointWriter<'_> {
    fn save(&self, name: &str, model: &Wav2SemModel, optimizer: &AdamState) -> std::result::Result<String, String> {
        let bytes = encode_checkpoint(model, Some(optimizer));
        crate::error::write_bytes(&self.dir.join(name), &bytes).map_err(|e| e.to_string())?;
        Ok(sha256_hex(&bytes))
    }
}

impl TrainObserver for CheckpointWriter<'_> {
    fn on_checkpoint(
        &mut self,
        kind: CheckpointKind,
        step: u64,
        model: &Wav2SemModel,
        optimizer: &AdamState,
    ) -> std::result::Result<(), String> {
        match kind {
            CheckpointKind::Periodic => self.save(&format!("step_{step:06}.ckpt"), model, optimizer).map(drop),
            CheckpointKind::Best => self.save("best.ckpt", model, optimizer).map(drop),
            CheckpointKind::Final => {
                self.final_digest = Some(self.save("final.ckpt", model, optimizer)?);
                Ok(())
            }
        }
    }
}

/// Trains on `manifest`, or continues from `resolved.resume`. On resume the
/// model shape and the optimizer state come from the checkpoint.
pub fn run_train(mut resolved: ResolvedTrain, out: &Path) -> Result<TrainSummary> {
    let manifest = PathBuf::from(&resolved.manifest);
    let entries = load_manifest(&manifest)?;
    let dataset = load_dataset(&manifest, &entries)?;
    let (mut model, mut trainer) = match &resolved.resume {
        Some(path) => {
            let ck = read_checkpoint(Path::new(path))?;
            let trainer = match ck.optimizer {
                Some(adam) => Trainer::resume(adam),
                None => Trainer::new(&ck.model, resolved.learning_rate),
            };
            resolved.model = ck.model.config().to_text();
            (ck.model, trainer)
        }
        None => {
            let model = Wav2SemModel::new(Wav2SemConfig::from_text(&resolved.model)?)?;
            let trainer = Trainer::new(&model, resolved.learning_rate);
            (model, trainer)
        }
    };
    write_resolved(out, &resolved)?;
    let mut writer = CheckpointWriter {
        dir: out,
        final_digest: None,
    };
    let log = train_with(&mut trainer, &mut model, &dataset, &resolved.train_config(), &mut writer)?;
    write_text(&out.join("train_log.tsv"), &train_log_text(&log.records))?;
    Ok(TrainSummary {
        log,
        final_checkpoint: out.join("final.ckpt"),
        final_sha256: writer.final_digest.expect("final checkpoint is always written"),
    })
}

// ---------------------------------------------------------------- encode

#[derive(Serialize)]
struct EncodeRecord<'a> {
    command: &'static str,
    checkpoint: String,
    audio: Vec<String>,
    out: &'a str,
}

/// One sentence embedding per clip, written as `<stem>.emb`.
pub fn run_encode(checkpoint: &Path, audio: &[PathBuf], out: &Path) -> Result<Vec<(PathBuf, SemanticEmbedding)>> {
    if audio.is_empty() {
        return Err(Error::Usage("encode needs at least one --audio file".into()));
    }
    let stems = unique_stems(audio)?;
    let model = read_checkpoint(checkpoint)?.model;
    let mut written = Vec::with_capacity(audio.len());
    for (path, stem) in stems {
        let e = model.encode(&read_wav(path)?)?;
        let dest = out.join(format!("{stem}.emb"));
        write_embedding(&dest, &e)?;
        written.push((dest, e));
    }
    write_resolved(
        out,
        &EncodeRecord {
            command: "encode",
            checkpoint: path_string(checkpoint),
            audio: audio.iter().map(|p| path_string(p)).collect(),
            out: &path_string(out),
        },
    )?;
    Ok(written)
}

// ---------------------------------------------------------------- fuse

/// The frozen frame encoder and fusion head that go with a checkpoint.
pub struct FusionStack {
    pub model: Wav2SemModel,
    pub phoneme: PhonemeEncoder,
    pub head: FusionHead,
    pub fusion_seed: u64,
}

impl FusionStack {
    /// `fusion_seed` defaults to the model's own seed.
    pub fn load(checkpoint: &Path, fusion_seed: Option<u64>) -> Result<Self> {
        let mut model = read_checkpoint(checkpoint)?.model;
        model.freeze();
        let base = fusion_seed.unwrap_or(model.config().seed);
        let (phoneme_seed, head_seed) = fusion_seeds(base);
        let phoneme = PhonemeEncoder::matching(model.config(), phoneme_seed)?;
        let head = FusionHead::new(model.config().model_dim, head_seed);
        Ok(Self {
            model,
            phoneme,
            head,
            fusion_seed: base,
        })
    }

    pub fn encoder_name(&self) -> String {
        format!("seeded phoneme encoder (fusion seed {})", self.fusion_seed)
    }
}

#[derive(Serialize)]
struct FuseRecord {
    command: &'static str,
    checkpoint: String,
    audio: String,
    frames: Option<String>,
    fusion_seed: u64,
}

/// Fused per-frame features for one clip, written as `<stem>.frames`.
/// `frames` replaces the built-in phoneme encoder with precomputed `[N', C]`
/// features.
pub fn run_fuse(
    checkpoint: &Path,
    audio: &Path,
    frames: Option<&Path>,
    fusion_seed: Option<u64>,
    out: &Path,
) -> Result<(PathBuf, Tensor)> {
    let stack = FusionStack::load(checkpoint, fusion_seed)?;
    let clip = read_wav(audio)?;
    let fp = match frames {
        Some(p) => read_frames(p)?,
        None => stack.phoneme.frame_features(&clip)?,
    };
    let fused = stack.head.fuse(&stack.model.encode(&clip)?, &fp)?;
    let inputs = [audio.to_path_buf()];
    let stem = &unique_stems(&inputs)?[0].1;
    let dest = out.join(format!("{stem}.frames"));
    write_frames(&dest, &fused)?;
    write_resolved(
        out,
        &FuseRecord {
            command: "fuse",
            checkpoint: path_string(checkpoint),
            audio: path_string(audio),
            frames: frames.map(path_string),
            fusion_seed: stack.fusion_seed,
        },
    )?;
    Ok((dest, fused))
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSummary {
    pub lve: f64,
    pub mve: f64,
    /// Signed.
    pub fdd: f64,
    pub frames: usize,
    pub vertices: usize,
}

impl EvalSummary {
    /// Scientific notation, shortest round-trip digits.
    pub fn lines(&self) -> String {
        format!(
            "LVE\t{:e}\nMVE\t{:e}\nFDD\t{:e}\n|FDD|\t{:e}\n",
            self.lve,
            self.mve,
            self.fdd,
            self.fdd.abs()
        )
    }
}

#[derive(Serialize)]
struct EvalRecord {
    command: &'static str,
    gt: String,
    pred: String,
    lip_mask: String,
    upper_mask: String,
}

pub fn run_eval(gt: &Path, pred: &Path, lip_mask: &Path, upper_mask: &Path, out: Option<&Path>) -> Result<EvalSummary> {
    let lip = read_mask(lip_mask, "lip")?;
    let upper = read_mask(upper_mask, "upper")?;
    let g = read_vertices(gt)?;
    let p = read_vertices(pred)?;
    let summary = EvalSummary {
        lve: lve(&g, &p, &lip)?,
        mve: mve(&g, &p)?,
        fdd: fdd(&g, &p, &upper)?,
        frames: g.frames(),
        vertices: g.vertices(),
    };
    if let Some(out) = out {
        let mut body = serde_json::to_value(summary).expect("plain record");
        body["fdd_abs"] = json!(summary.fdd.abs());
        write_text(&out.join("metrics.json"), &format!("{body}\n"))?;
        write_resolved(
            out,
            &EvalRecord {
                command: "eval",
                gt: path_string(gt),
                pred: path_string(pred),
                lip_mask: path_string(lip_mask),
                upper_mask: path_string(upper_mask),
            },
        )?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------- analyze

pub struct AnalyzeInputs<'a> {
    pub cmudict: &'a Path,
    pub vocab: &'a Path,
    pub manifest: &'a Path,
    pub checkpoint: &'a Path,
    pub similarity: Option<&'a Path>,
    pub curation: Option<&'a Path>,
    pub fusion_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeSummary {
    pub pairs: Vec<NearHomophonePair>,
    pub report: DecouplingReport,
    /// Vocabulary words missing from the dictionary.
    pub skipped: Vec<String>,
    /// Pairs dropped because a word is never spoken in the manifest.
    pub unspoken: Vec<(String, String)>,
    pub projection: Vec<(String, f64, f64)>,
}

#[derive(Serialize)]
struct AnalyzeRecord {
    command: &'static str,
    cmudict: String,
    vocab: String,
    manifest: String,
    checkpoint: String,
    similarity: Option<String>,
    curation: Option<String>,
    fusion_seed: u64,
}

fn edit_json(e: &Edit) -> serde_json::Value {
    match e {
        Edit::Identical => json!({"kind": "identical"}),
        Edit::Substitute { position, from, to } => {
            json!({"kind": "substitute", "position": position, "from": from, "to": to})
        }
        Edit::Manual => json!({"kind": "manual"}),
    }
}

fn pair_line(p: &NearHomophonePair) -> String {
    json!({
        "word_a": p.word_a,
        "word_b": p.word_b,
        "variant_a": p.variant_a,
        "variant_b": p.variant_b,
        "edit": edit_json(&p.edit),
        "similarity_class": p.similarity_class,
    })
    .to_string()
}

#[derive(Default)]
struct Mean {
    sum: Vec<f64>,
    count: usize,
}

impl Mean {
    fn add(&mut self, v: &[f64]) {
        if self.sum.is_empty() {
            self.sum = vec![0.0; v.len()];
        }
        self.sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        self.count += 1;
    }

    fn value(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count as f64).collect()
    }
}

/// Raw and fused word features, averaged over every spoken occurrence.
type WordFeatures = (BTreeMap<String, Vec<f64>>, BTreeMap<String, Vec<f64>>);

fn word_features(stack: &FusionStack, manifest: &Path, words: &BTreeSet<String>) -> Result<WordFeatures> {
    let mut raw: BTreeMap<String, Mean> = BTreeMap::new();
    let mut fused: BTreeMap<String, Mean> = BTreeMap::new();
    if words.is_empty() {
        return Ok(Default::default());
    }
    for entry in load_manifest(manifest)? {
        if !entry.words.iter().any(|w| words.contains(&w.word)) {
            continue;
        }
        let clip = read_wav(&entry.audio_path)?;
        let fp = stack.phoneme.frame_features(&clip)?;
        let fs = stack.model.encode(&clip)?;
        let ff = stack.head.fuse(&fs, &fp)?;
        let rate = stack.phoneme.frame_rate(clip.sample_rate());
        for w in entry.words.iter().filter(|w| words.contains(&w.word)) {
            let span = (w.start_s, w.end_s);
            let context = |e| Error::parse(manifest, format!("line {}: word {}: {e}", entry.line, w.word));
            raw.entry(w.word.clone())
                .or_default()
                .add(&word_feature(&fp, span, rate).map_err(context)?);
            fused
                .entry(w.word.clone())
                .or_default()
                .add(&word_feature(&ff, span, rate).map_err(context)?);
        }
    }
    let finish = |m: BTreeMap<String, Mean>| m.into_iter().map(|(k, v)| (k, v.value())).collect();
    Ok((finish(raw), finish(fused)))
}

/// Mines pairs from the vocabulary, measures raw and fused word-feature
/// distances and projects the fused features to 2-D.
pub fn run_analyze(inputs: &AnalyzeInputs<'_>, out: &Path) -> Result<AnalyzeSummary> {
    let dict_text = read_text(inputs.cmudict)?;
    let dict = parse_cmudict(&dict_text).map_err(|e| Error::parse(inputs.cmudict, e.to_string()))?;
    let vocab = read_vocab(inputs.vocab)?;
    let table = match inputs.similarity {
        Some(p) => SimilarityTable::parse(&read_text(p)?).map_err(|e| Error::parse(p, e.to_string()))?,
        None => SimilarityTable::default(),
    };
    let curation = match inputs.curation {
        Some(p) => Curation::parse(&read_text(p)?).map_err(|e| Error::parse(p, e.to_string()))?,
        None => Curation::default(),
    };
    let stack = FusionStack::load(inputs.checkpoint, inputs.fusion_seed)?;

    let (kept, skipped) = restrict_to_vocab(&dict, &vocab);
    let pairs = curation.apply(mine_pairs(kept.iter().copied(), &table));
    let known: BTreeSet<String> = kept.iter().map(|e| e.word.clone()).collect();
    let (raw, fused) = word_features(&stack, inputs.manifest, &known)?;

    let (spoken, unspoken): (Vec<_>, Vec<_>) = pairs
        .iter()
        .cloned()
        .partition(|p| fused.contains_key(&p.word_a) && fused.contains_key(&p.word_b));
    let unspoken: Vec<(String, String)> = unspoken.into_iter().map(|p| (p.word_a, p.word_b)).collect();
    let report = decoupling_report(&stack.encoder_name(), &spoken, &raw, &fused)?;

    let points: Vec<(String, Vec<f64>)> = fused.into_iter().collect();
    let projection = if points.len() >= 2 {
        match project_2d(&points) {
            Ok(p) => p,
            Err(wav2sem_core::analysis::AnalysisError::Degenerate) => Vec::new(),
            Err(e) => return Err(e.into()),
        }
    } else {
        Vec::new()
    };

    let mut pairs_text = String::new();
    for p in &pairs {
        pairs_text.push_str(&pair_line(p));
        pairs_text.push('\n');
    }
    write_text(&out.join("pairs.jsonl"), &pairs_text)?;

    let mut rows = String::new();
    for r in &report.rows {
        let line = json!({
            "word_a": r.word_a,
            "word_b": r.word_b,
            "similarity_class": r.similarity_class,
            "raw": r.raw,
            "fused": r.fused,
        });
        rows.push_str(&format!("{line}\n"));
    }
    write_text(&out.join("report.jsonl"), &rows)?;
    let summary = json!({
        "encoder": report.encoder,
        "pairs": report.rows.len(),
        "mean_raw": report.mean_raw,
        "mean_fused": report.mean_fused,
        "skipped_words": skipped,
        "unspoken_pairs": unspoken,
    });
    write_text(&out.join("summary.json"), &format!("{summary}\n"))?;

    let mut text = render_text(&report, &skipped);
    if !unspoken.is_empty() {
        text.push_str("\npairs without a spoken occurrence in the manifest:\n");
        for (a, b) in &unspoken {
            text.push_str(&format!("  {a} / {b}\n"));
        }
    }
    if projection.is_empty() {
        text.push_str("\nprojection: fewer than two distinct fused word features, nothing to project\n");
    }
    write_text(&out.join("report.txt"), &text)?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["label", "x", "y"]).expect("in-memory write");
    for (label, x, y) in &projection {
        csv.write_record([label.clone(), x.to_string(), y.to_string()])
            .expect("in-memory write");
    }
    write_text(
        &out.join("projection.csv"),
        &String::from_utf8(csv.into_inner().expect("in-memory write")).expect("utf-8 fields"),
    )?;

    write_resolved(
        out,
        &AnalyzeRecord {
            command: "analyze",
            cmudict: path_string(inputs.cmudict),
            vocab: path_string(inputs.vocab),
            manifest: path_string(inputs.manifest),
            checkpoint: path_string(inputs.checkpoint),
            similarity: inputs.similarity.map(path_string),
            curation: inputs.curation.map(path_string),
            fusion_seed: stack.fusion_seed,
        },
    )?;

    Ok(AnalyzeSummary {
        pairs,
        report,
        skipped,
        unspoken,
        projection,
    })
}
