//! Versioned binary container shared by network checkpoints and SVM models.
//!
//! Layout (little-endian):
//!
//! ```text
//! "PDLC" | kind[4] | version u32 | header_len u32 | header (UTF-8 key=value text)
//! n_blocks u32 | n_blocks x ( dtype u8 (4 = f32, 8 = f64) | count u64 | values )
//! ```

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PDLC";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Block {
    pub fn len(&self) -> usize {
        match self {
            Block::F32(v) => v.len(),
            Block::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: [u8; 4],
    pub header: String,
    pub blocks: Vec<Block>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.kind);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.header.len() as u32).to_le_bytes());
        out.extend_from_slice(self.header.as_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for block in &self.blocks {
            match block {
                Block::F32(v) => {
                    out.push(4);
                    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                    v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
                }
                Block::F64(v) => {
                    out.push(8);
                    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                    v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
                }
            }
        }
        out
    }

    /// Parses a container, requiring the given kind tag.
    pub fn from_bytes(bytes: &[u8], kind: &[u8; 4]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC || r.take(4)? != kind {
            return Err(Error::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: VERSION,
            });
        }
        let header_len = r.u32()? as usize;
        let header = String::from_utf8(r.take(header_len)?.to_vec())
            .map_err(|_| Error::BlockMismatch("header is not UTF-8".into()))?;
        let n_blocks = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(n_blocks.min(1 << 16));
        for _ in 0..n_blocks {
            let dtype = r.take(1)?[0];
            let count = r.u64()? as usize;
            let block = match dtype {
                4 => {
                    let raw = r.take(count.checked_mul(4).ok_or(Error::BlockMismatch("block too large".into()))?)?;
                    Block::F32(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
                }
                8 => {
                    let raw = r.take(count.checked_mul(8).ok_or(Error::BlockMismatch("block too large".into()))?)?;
                    Block::F64(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
                }
                other => return Err(Error::BlockMismatch(format!("unknown dtype tag {other}"))),
            };
            blocks.push(block);
        }
        if r.pos != bytes.len() {
            return Err(Error::BlockMismatch(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Container {
            kind: *kind,
            header,
            blocks,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - (self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
