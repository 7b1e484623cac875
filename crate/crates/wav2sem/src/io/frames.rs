//! Frame features: `W2SFRM1\0`, u32 N, u32 C, N × C f64 row-major.

use std::path::Path;

use wav2sem_core::Tensor;

use super::{len_u32, put_f64s, put_u32, BinError, Reader};
use crate::error::{read_bytes, write_bytes, Error, Result};

pub const MAGIC: &[u8; 8] = b"W2SFRM1\0";

pub fn encode_frames(t: &Tensor) -> Result<Vec<u8>, BinError> {
    let [n, c] = t.shape() else {
        return Err(BinError::Field {
            field: "shape",
            message: format!("expected [N, C], got {:?}", t.shape()),
        });
    };
    let mut out = Vec::with_capacity(16 + 8 * t.numel());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, len_u32(*n, "N")?);
    put_u32(&mut out, len_u32(*c, "C")?);
    put_f64s(&mut out, t.data());
    Ok(out)
}

pub fn decode_frames(bytes: &[u8]) -> Result<Tensor, BinError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC, "W2SFRM1")?;
    let n = r.u32("N")? as usize;
    let c = r.u32("C")? as usize;
    if n == 0 || c == 0 {
        return Err(BinError::Field {
            field: "shape",
            message: format!("N and C must be positive, got {n} x {c}"),
        });
    }
    let values = r.f64s(n * c, "frame payload")?;
    r.finish()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BinError::Field {
            field: "values",
            message: "non-finite frame value".into(),
        });
    }
    Ok(Tensor::new(vec![n, c], values).expect("shape checked"))
}

pub fn read_frames(path: &Path) -> Result<Tensor> {
    decode_frames(&read_bytes(path)?).map_err(|source| Error::Binary {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_frames(path: &Path, t: &Tensor) -> Result<()> {
    let bytes = encode_frames(t).map_err(|source| Error::Binary {
        path: path.to_path_buf(),
        source,
    })?;
    write_bytes(path, &bytes)
}
