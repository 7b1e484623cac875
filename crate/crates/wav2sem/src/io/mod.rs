//! On-disk formats. Every multi-byte number is little-endian.

pub mod checkpoint;
pub mod embedding;
pub mod frames;
pub mod manifest;
pub mod text;
pub mod vertex;
pub mod wav;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BinError {
    #[error("bad magic, expected {expected:?}")]
    Magic { expected: &'static str },
    #[error("truncated {what}: need {needed} bytes, {available} left")]
    Truncated {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("{field}: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

/// Cursor over a byte buffer with truncation-aware reads.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], BinError> {
        if self.remaining() < n {
            return Err(BinError::Truncated {
                what,
                needed: n,
                available: self.remaining(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &'static [u8; 8], name: &'static str) -> Result<(), BinError> {
        match self.take(8, "magic") {
            Ok(m) if m == expected => Ok(()),
            _ => Err(BinError::Magic { expected: name }),
        }
    }

    pub fn u8(&mut self, what: &'static str) -> Result<u8, BinError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, BinError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64, BinError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f32(&mut self, what: &'static str) -> Result<f32, BinError> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn f64(&mut self, what: &'static str) -> Result<f64, BinError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, BinError> {
        let bytes = n.checked_mul(8).ok_or(BinError::Truncated {
            what,
            needed: usize::MAX,
            available: self.remaining(),
        })?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<(), BinError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(BinError::Trailing(n)),
        }
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn len_u32(n: usize, field: &'static str) -> Result<u32, BinError> {
    u32::try_from(n).map_err(|_| BinError::Field {
        field,
        message: format!("{n} does not fit in 32 bits"),
    })
}
