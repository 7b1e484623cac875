//! Vertex sequences: `W2SVTX1\0`, u32 T, u32 V, f32 fps, T × V × 3 f64.

use std::path::Path;

use wav2sem_core::metrics::VertexSequence;

use super::{len_u32, put_f64s, put_u32, BinError, Reader};
use crate::error::{read_bytes, write_bytes, Error, Result};

pub const MAGIC: &[u8; 8] = b"W2SVTX1\0";

pub fn encode_vertices(s: &VertexSequence) -> Result<Vec<u8>, BinError> {
    let mut out = Vec::with_capacity(20 + 8 * s.positions().len());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, len_u32(s.frames(), "T")?);
    put_u32(&mut out, len_u32(s.vertices(), "V")?);
    out.extend_from_slice(&s.fps().to_le_bytes());
    put_f64s(&mut out, s.positions());
    Ok(out)
}

pub fn decode_vertices(bytes: &[u8]) -> Result<VertexSequence, BinError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC, "W2SVTX1")?;
    let t = r.u32("T")? as usize;
    let v = r.u32("V")? as usize;
    let fps = r.f32("fps")?;
    let positions = r.f64s(t * v * 3, "vertex payload")?;
    r.finish()?;
    VertexSequence::new(t, v, fps, positions).map_err(|e| BinError::Field {
        field: "sequence",
        message: e.to_string(),
    })
}

pub fn read_vertices(path: &Path) -> Result<VertexSequence> {
    decode_vertices(&read_bytes(path)?).map_err(|source| Error::Binary {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_vertices(path: &Path, s: &VertexSequence) -> Result<()> {
    let bytes = encode_vertices(s).map_err(|source| Error::Binary {
        path: path.to_path_buf(),
        source,
    })?;
    write_bytes(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let s = VertexSequence::new(2, 1, 25.0, vec![0.1, 0.2, 0.3, -1.0, 2.0, 3.5]).unwrap();
        let b = encode_vertices(&s).unwrap();
        assert_eq!(b.len(), 20 + 48);
        assert_eq!(decode_vertices(&b).unwrap(), s);
        assert!(matches!(decode_vertices(&b[..30]), Err(BinError::Truncated { .. })));
        let mut zero = b.clone();
        zero[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_vertices(&zero[..20]), Err(BinError::Field { .. })));
    }
}
