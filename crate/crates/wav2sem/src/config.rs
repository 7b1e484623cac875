//! Run configuration: command-line flags override the TOML file, which
//! overrides the built-in canonical defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wav2sem_core::rng::derive_seed;
use wav2sem_core::training::TrainConfig;
use wav2sem_core::Wav2SemConfig;

use crate::error::{read_text, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Canonical,
    Tiny,
}

impl Preset {
    pub fn model(self) -> Wav2SemConfig {
        match self {
            Preset::Canonical => Wav2SemConfig::canonical(),
            Preset::Tiny => Wav2SemConfig::tiny(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Canonical => "canonical",
            Preset::Tiny => "tiny",
        }
    }
}

/// Everything a config file may set. All fields are optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub checkpoint_every: Option<u64>,
    pub shuffle: Option<bool>,
    /// Base seed for the frozen phoneme encoder and the fusion head.
    pub fusion_seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::parse(&text).map_err(|m| Error::parse(path, m))
    }

    /// Field-wise `self` over `base`.
    pub fn or(self, base: ConfigFile) -> ConfigFile {
        ConfigFile {
            preset: self.preset.or(base.preset),
            seed: self.seed.or(base.seed),
            epochs: self.epochs.or(base.epochs),
            learning_rate: self.learning_rate.or(base.learning_rate),
            batch_size: self.batch_size.or(base.batch_size),
            checkpoint_every: self.checkpoint_every.or(base.checkpoint_every),
            shuffle: self.shuffle.or(base.shuffle),
            fusion_seed: self.fusion_seed.or(base.fusion_seed),
        }
    }
}

/// Stream labels under the run seed.
const SHUFFLE_STREAM: u64 = 3;
const PHONEME_STREAM: u64 = 1;
const HEAD_STREAM: u64 = 2;

/// Fully resolved training settings; written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedTrain {
    pub preset: Preset,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub checkpoint_every: u64,
    pub shuffle: bool,
    pub manifest: String,
    pub resume: Option<String>,
    /// Canonical model text, as stored in checkpoints.
    pub model: String,
}

impl ResolvedTrain {
    pub fn new(settings: &ConfigFile, manifest: &Path, resume: Option<&Path>) -> Self {
        let canon = TrainConfig::canonical();
        let preset = settings.preset.unwrap_or_default();
        let seed = settings.seed.unwrap_or(canon.seed);
        Self {
            preset,
            seed,
            epochs: settings.epochs.unwrap_or(canon.epochs),
            learning_rate: settings.learning_rate.unwrap_or(canon.learning_rate),
            batch_size: settings.batch_size.unwrap_or(canon.batch_size),
            checkpoint_every: settings.checkpoint_every.unwrap_or(canon.checkpoint_every),
            shuffle: settings.shuffle.unwrap_or(canon.shuffle),
            manifest: manifest.display().to_string(),
            resume: resume.map(|p| p.display().to_string()),
            model: preset.model().with_seed(seed).to_text(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed: derive_seed(self.seed, SHUFFLE_STREAM),
            checkpoint_every: self.checkpoint_every,
            shuffle: self.shuffle,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved config serializes")
    }
}

/// Seeds for the phoneme encoder and fusion head, from one base seed.
pub fn fusion_seeds(base: u64) -> (u64, u64) {
    (derive_seed(base, PHONEME_STREAM), derive_seed(base, HEAD_STREAM))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_file_canonical() {
        let file = ConfigFile::parse("preset = \"tiny\"\nepochs = 5\nlearning_rate = 0.01\n").unwrap();
        let flags = ConfigFile {
            epochs: Some(7),
            ..Default::default()
        };
        let r = ResolvedTrain::new(&flags.or(file), Path::new("m.jsonl"), None);
        assert_eq!(r.epochs, 7);
        assert_eq!(r.learning_rate, 0.01);
        assert_eq!(r.preset, Preset::Tiny);
        assert_eq!(r.batch_size, 1);
        let canon = ResolvedTrain::new(&ConfigFile::default(), Path::new("m"), None);
        assert_eq!((canon.epochs, canon.learning_rate), (200, 1e-4));
        assert_eq!(canon.preset, Preset::Canonical);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ConfigFile::parse("epoch = 3").is_err());
        assert!(ConfigFile::parse("preset = \"huge\"").is_err());
    }

    #[test]
    fn resolved_round_trips() {
        let r = ResolvedTrain::new(&ConfigFile::default(), Path::new("a/b.jsonl"), Some(Path::new("c.ckpt")));
        let back: ResolvedTrain = toml::from_str(&r.to_toml()).unwrap();
        assert_eq!(back, r);
    }
}
