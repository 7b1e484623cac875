//! `W2SEMB1\0`, kind byte (0 cls, 1 mean), u32 dim, dim × f64.

use std::path::Path;

use wav2sem_core::{EmbeddingKind, SemanticEmbedding};

use super::{put_f64s, put_u32, BinError, Reader};
use crate::error::{read_bytes, write_bytes, Error, Result};

pub const MAGIC: &[u8; 8] = b"W2SEMB1\0";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error(transparent)]
    Binary(#[from] BinError),
    #[error("unknown embedding kind byte {0}")]
    Kind(u8),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

pub fn kind_byte(kind: EmbeddingKind) -> u8 {
    match kind {
        EmbeddingKind::Cls => 0,
        EmbeddingKind::Mean => 1,
    }
}

pub fn encode_embedding(e: &SemanticEmbedding) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + 8 * e.dim());
    out.extend_from_slice(MAGIC);
    out.push(kind_byte(e.kind()));
    put_u32(&mut out, e.dim() as u32);
    put_f64s(&mut out, e.values());
    out
}

pub fn decode_embedding(bytes: &[u8]) -> Result<SemanticEmbedding, EmbeddingError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC, "W2SEMB1")?;
    let kind = match r.u8("kind")? {
        0 => EmbeddingKind::Cls,
        1 => EmbeddingKind::Mean,
        k => return Err(EmbeddingError::Kind(k)),
    };
    let dim = r.u32("dim")? as usize;
    if dim == 0 {
        return Err(EmbeddingError::ZeroDim);
    }
    let values = r.f64s(dim, "embedding payload")?;
    r.finish()?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(EmbeddingError::NonFinite(i));
    }
    Ok(SemanticEmbedding::new(values, kind).expect("validated above"))
}

pub fn read_embedding(path: &Path) -> Result<SemanticEmbedding> {
    decode_embedding(&read_bytes(path)?).map_err(|source| Error::Embedding {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_embedding(path: &Path, e: &SemanticEmbedding) -> Result<()> {
    write_bytes(path, &encode_embedding(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_dim_three() {
        let e = SemanticEmbedding::new(vec![1.0, 0.0, -1.0], EmbeddingKind::Mean).unwrap();
        let b = encode_embedding(&e);
        assert_eq!(b.len(), 13 + 24);
        assert_eq!(b[8], 1);
        assert_eq!(decode_embedding(&b).unwrap(), e);
    }

    #[test]
    fn errors() {
        let e = SemanticEmbedding::new(vec![1.0, 2.0], EmbeddingKind::Cls).unwrap();
        let b = encode_embedding(&e);
        assert!(matches!(
            decode_embedding(&b[..b.len() - 3]),
            Err(EmbeddingError::Binary(BinError::Truncated { .. }))
        ));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_embedding(&bad),
            Err(EmbeddingError::Binary(BinError::Magic { .. }))
        ));
        let mut bad = b.clone();
        bad[8] = 7;
        assert_eq!(decode_embedding(&bad), Err(EmbeddingError::Kind(7)));
        let mut bad = b.clone();
        bad[13..21].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(decode_embedding(&bad), Err(EmbeddingError::NonFinite(0)));
        let mut bad = b.clone();
        bad.push(0);
        assert!(matches!(
            decode_embedding(&bad),
            Err(EmbeddingError::Binary(BinError::Trailing(1)))
        ));
    }
}
