//! Argument parsing and dispatch for the `wav2sem` binary. Results go to the
//! supplied writer; errors are returned for the caller to report.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigFile, Preset, ResolvedTrain};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::pipeline::{run_analyze, run_encode, run_eval, run_fuse, run_train, AnalyzeInputs};

#[derive(Debug, Parser)]
#[command(name = "wav2sem", version, about = "Semantic audio encoder toolkit")]
pub struct Cli {
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align the sentence encoder with target embeddings.
    Train(TrainArgs),
    /// Sentence embeddings for audio files.
    Encode(EncodeArgs),
    /// Fused per-frame features for one audio file.
    Fuse(FuseArgs),
    /// LVE, MVE and FDD between two vertex sequences.
    Eval(EvalArgs),
    /// Near-homophone pairs and their raw vs fused feature distances.
    Analyze(AnalyzeArgs),
    /// Write the synthetic fixture set.
    ExportFixtures,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Periodic checkpoint cadence in steps; 0 disables.
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Reshuffle the sample order each epoch.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub shuffle: Option<bool>,
    /// Continue from a checkpoint, including its optimizer state.
    #[arg(long, value_name = "CKPT")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub audio: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub audio: PathBuf,
    /// Precomputed `[N, C]` frame features instead of the built-in encoder.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub fusion_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub lip_mask: PathBuf,
    #[arg(long)]
    pub upper_mask: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub cmudict: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Phoneme similarity classes; defaults to the built-in table.
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// `+ A B` / `- A B` lines applied after mining.
    #[arg(long)]
    pub curation: Option<PathBuf>,
    #[arg(long)]
    pub fusion_seed: Option<u64>,
}

fn require_out(out: Option<&Path>, command: &str) -> Result<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| Error::Usage(format!("{command} needs --out DIR")))
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            return emit(stdout, &e.render().to_string());
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(Error::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    execute(cli, stdout)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let out = cli.out.as_deref();
    let fusion_seed = |flag: Option<u64>| flag.or(file.fusion_seed).or(cli.seed).or(file.seed);
    match cli.command {
        Command::Train(a) => {
            let out = require_out(out, "train")?;
            let flags = ConfigFile {
                preset: a.preset,
                seed: cli.seed,
                epochs: a.epochs,
                learning_rate: a.learning_rate,
                batch_size: a.batch_size,
                checkpoint_every: a.checkpoint_every,
                shuffle: a.shuffle,
                fusion_seed: None,
            };
            let resolved = ResolvedTrain::new(&flags.or(file.clone()), &a.manifest, a.resume.as_deref());
            let s = run_train(resolved, &out)?;
            let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:e}"));
            emit(
                stdout,
                &format!(
                    "steps\t{}\ninitial_loss\t{}\nfinal_loss\t{}\ncheckpoint\t{}\nsha256\t{}\n",
                    s.log.len(),
                    fmt(s.initial_loss()),
                    fmt(s.final_loss()),
                    s.final_checkpoint.display(),
                    s.final_sha256
                ),
            )
        }
        Command::Encode(a) => {
            let out = require_out(out, "encode")?;
            for (path, e) in run_encode(&a.checkpoint, &a.audio, &out)? {
                emit(stdout, &format!("{}\tdim {}\n", path.display(), e.dim()))?;
            }
            Ok(())
        }
        Command::Fuse(a) => {
            let out = require_out(out, "fuse")?;
            let (path, t) = run_fuse(
                &a.checkpoint,
                &a.audio,
                a.frames.as_deref(),
                fusion_seed(a.fusion_seed),
                &out,
            )?;
            emit(stdout, &format!("{}\t{:?}\n", path.display(), t.shape()))
        }
        Command::Eval(a) => {
            let s = run_eval(&a.gt, &a.pred, &a.lip_mask, &a.upper_mask, out)?;
            emit(stdout, &s.lines())
        }
        Command::Analyze(a) => {
            let out = require_out(out, "analyze")?;
            let s = run_analyze(
                &AnalyzeInputs {
                    cmudict: &a.cmudict,
                    vocab: &a.vocab,
                    manifest: &a.manifest,
                    checkpoint: &a.checkpoint,
                    similarity: a.similarity.as_deref(),
                    curation: a.curation.as_deref(),
                    fusion_seed: fusion_seed(a.fusion_seed),
                },
                &out,
            )?;
            let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:e}"));
            emit(
                stdout,
                &format!(
                    "pairs\t{}\nmean_raw\t{}\nmean_fused\t{}\nskipped\t{}\n",
                    s.report.rows.len(),
                    fmt(s.report.mean_raw),
                    fmt(s.report.mean_fused),
                    s.skipped.join(",")
                ),
            )
        }
        Command::ExportFixtures => {
            let out = require_out(out, "export-fixtures")?;
            let seed = cli.seed.or(file.seed).unwrap_or(0);
            let p = fixtures::export(&out, seed)?;
            emit(stdout, &format!("fixtures\t{}\n", p.root.display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_single_line() {
        let mut sink = Vec::new();
        let e = run(["wav2sem", "train"], &mut sink).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(!e.to_string().contains('\n'), "{e}");
        let e = run(["wav2sem", "frobnicate"], &mut sink).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn help_goes_to_stdout() {
        let mut sink = Vec::new();
        run(["wav2sem", "--help"], &mut sink).unwrap();
        assert!(String::from_utf8(sink).unwrap().contains("export-fixtures"));
    }

    #[test]
    fn out_is_required() {
        let e = run(["wav2sem", "export-fixtures"], &mut Vec::new()).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }
}
