//! `THOP` binary tensor files.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | field                                            |
//! |-------|--------------------------------------------------|
//! | 4     | magic `THOP`                                     |
//! | 4     | format version (`u32`, currently 1)              |
//! | 1     | semantics (0 = simple path, 1 = walk)            |
//! | 1     | payload (0 = `f64` entries, 1 = `i64` entries)   |
//! | 4     | path length `L` (`u32`)                          |
//! | 12    | dims `n, n, depth` (three `u32`)                 |
//! | 8·N   | entries, row-major (`i` outer, `j`, `k` inner)   |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::reduce::ReducedTensor;
use crate::tensor::{NormalizedTensor, PathTensor, Semantics};

pub const MAGIC: &[u8; 4] = b"THOP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 1 + 4 + 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Real(Vec<f64>),
    Integer(Vec<i64>),
}

/// Decoded contents of a `THOP` file.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub semantics: Semantics,
    pub length: u32,
    pub dims: [usize; 3],
    pub payload: Payload,
}

impl TensorFile {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let count = self.dims.iter().product::<usize>();
        let (flag, len) = match &self.payload {
            Payload::Real(v) => (0u8, v.len()),
            Payload::Integer(v) => (1u8, v.len()),
        };
        if len != count {
            return Err(Error::Shape(format!("{len} entries for dims {:?}", self.dims)));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * count);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.semantics.code());
        out.push(flag);
        out.extend_from_slice(&self.length.to_le_bytes());
        for &d in &self.dims {
            let d = u32::try_from(d).map_err(|_| Error::Dimension(format!("dimension {d} exceeds u32")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &self.payload {
            Payload::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::Integer(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format("missing THOP magic".into()));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let semantics = Semantics::from_code(bytes[8])?;
        let flag = bytes[9];
        let length = u32_at(10);
        let dims = [u32_at(14) as usize, u32_at(18) as usize, u32_at(22) as usize];
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("dims overflow".into()))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != count.saturating_mul(8) {
            return Err(Error::Format(format!(
                "payload has {} bytes, dims {:?} need {}",
                body.len(),
                dims,
                count * 8
            )));
        }
        let words = body.chunks_exact(8).map(|c| <[u8; 8]>::try_from(c).unwrap());
        let payload = match flag {
            0 => Payload::Real(words.map(f64::from_le_bytes).collect()),
            1 => Payload::Integer(words.map(i64::from_le_bytes).collect()),
            other => return Err(Error::Format(format!("unknown payload flag {other}"))),
        };
        Ok(Self { semantics, length, dims, payload })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.encode()?)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    /// Interpret as a normalized `n × n × n` tensor. Integer payloads are
    /// taken to be raw counts and normalized on the way in.
    pub fn into_normalized(self) -> Result<NormalizedTensor> {
        let [n, n2, depth] = self.dims;
        if n != n2 || depth != n {
            return Err(Error::Format(format!("expected an n x n x n tensor, got {:?}", self.dims)));
        }
        match self.payload {
            Payload::Real(data) => NormalizedTensor::from_parts(n, self.length, self.semantics, data),
            Payload::Integer(data) => {
                let counts = PathTensor::from_parts(n, self.length, self.semantics, data)?;
                Ok(crate::tensor::normalize_tensor(&counts))
            }
        }
    }

    pub fn into_counts(self) -> Result<PathTensor> {
        let [n, n2, depth] = self.dims;
        if n != n2 || depth != n {
            return Err(Error::Format(format!("expected an n x n x n tensor, got {:?}", self.dims)));
        }
        match self.payload {
            Payload::Integer(data) => PathTensor::from_parts(n, self.length, self.semantics, data),
            Payload::Real(_) => Err(Error::Format("expected an integer payload".into())),
        }
    }

    pub fn into_reduced(self) -> Result<ReducedTensor> {
        let [n, n2, depth] = self.dims;
        if n != n2 {
            return Err(Error::Format(format!("expected an n x n x d tensor, got {:?}", self.dims)));
        }
        match self.payload {
            Payload::Real(data) => ReducedTensor::from_parts(n, self.length, depth, self.semantics, data),
            Payload::Integer(_) => Err(Error::Format("reduced tensors carry real payloads".into())),
        }
    }
}

impl From<&NormalizedTensor> for TensorFile {
    fn from(t: &NormalizedTensor) -> Self {
        Self {
            semantics: t.semantics(),
            length: t.length(),
            dims: [t.n(), t.n(), t.n()],
            payload: Payload::Real(t.as_slice().to_vec()),
        }
    }
}

impl From<&PathTensor> for TensorFile {
    fn from(t: &PathTensor) -> Self {
        Self {
            semantics: t.semantics(),
            length: t.length(),
            dims: [t.n(), t.n(), t.n()],
            payload: Payload::Integer(t.as_slice().to_vec()),
        }
    }
}

impl From<&ReducedTensor> for TensorFile {
    fn from(t: &ReducedTensor) -> Self {
        Self {
            semantics: t.semantics(),
            length: t.length(),
            dims: [t.n(), t.n(), t.depth()],
            payload: Payload::Real(t.as_slice().to_vec()),
        }
    }
}
