//! Near-homophone analysis: pronunciation dictionary, similarity-rule pair
//! mining, word-level decoupling distances and a 2-D projection for plots.

mod cmudict;
mod miner;
mod projection;
mod report;
mod similarity;

pub use cmudict::{parse_cmudict, restrict_to_vocab, Phoneme, WordPronunciation, ARPABET, VOWELS};
pub use miner::{mine_pairs, Curation, Edit, NearHomophonePair, HOMOPHONE_CLASS, MANUAL_CLASS};
pub use projection::project_2d;
pub use report::{
    decoupling_report, render_text, DecouplingReport, PairDistance, ReferenceRow,
    REFERENCE_DECOUPLING,
};
pub use similarity::SimilarityTable;

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("pronunciation dictionary line {line}: {message}")]
    Dictionary { line: usize, message: String },
    #[error("similarity table line {line}: {message}")]
    Similarity { line: usize, message: String },
    #[error("curation list line {line}: {message}")]
    Curation { line: usize, message: String },
    #[error("no feature vector for word {0:?}")]
    MissingFeature(String),
    #[error("feature vector for {word:?} has dim {got}, expected {expected}")]
    FeatureDim {
        word: String,
        got: usize,
        expected: usize,
    },
    #[error("projection needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("projection input is degenerate: all vectors are identical")]
    Degenerate,
    #[error("feature values must be finite")]
    NonFinite,
}
