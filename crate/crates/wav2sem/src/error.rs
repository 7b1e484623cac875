use std::io;
use std::path::{Path, PathBuf};

use wav2sem_core::analysis::AnalysisError;
use wav2sem_core::fusion::FusionError;
use wav2sem_core::metrics::MetricsError;
use wav2sem_core::model::ModelError;
use wav2sem_core::training::TrainError;
use wav2sem_core::AudioError;

use crate::io::checkpoint::CheckpointError;
use crate::io::embedding::EmbeddingError;
use crate::io::manifest::ManifestError;
use crate::io::wav::WavError;
use crate::io::BinError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", .path.display())]
    NotFound { path: PathBuf },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", .path.display())]
    Wav { path: PathBuf, source: WavError },
    #[error("{}: {source}", .path.display())]
    Embedding { path: PathBuf, source: EmbeddingError },
    #[error("{}: {source}", .path.display())]
    Manifest { path: PathBuf, source: ManifestError },
    #[error("{}: {source}", .path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{}: {source}", .path.display())]
    Binary { path: PathBuf, source: BinError },
    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl Error {
    /// 2 for usage mistakes and missing inputs, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotFound { .. } | Error::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Error::NotFound {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub(crate) fn parse(path: &Path, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| Error::parse(path, "not valid UTF-8"))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
