//! Little-endian binary container shared by encoder checkpoints, centroid
//! caches and classifier checkpoints.
//!
//! Every file starts with a 16-byte header:
//!
//! | offset | size | content                                   |
//! |-------:|-----:|-------------------------------------------|
//! | 0      | 8    | magic `CLAN\x00NID`                        |
//! | 8      | 4    | format version, `u32` LE (currently 1)    |
//! | 12     | 4    | file kind, `u32` LE (see [`FileKind`])    |
//!
//! Tensors are written as `u32` rows, `u32` cols, then `rows * cols`
//! `f32` values in row-major order, all little-endian.

use std::io::{Read, Write};

use crate::error::{ClanError, Result};
use crate::numerics::Matrix;

pub const MAGIC: [u8; 8] = *b"CLAN\x00NID";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FileKind {
    Encoder = 1,
    Centroid = 2,
    Classifier = 3,
}

impl FileKind {
    fn from_u32(v: u32) -> Option<FileKind> {
        match v {
            1 => Some(FileKind::Encoder),
            2 => Some(FileKind::Centroid),
            3 => Some(FileKind::Classifier),
            _ => None,
        }
    }
}

pub(crate) struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(mut inner: W, kind: FileKind) -> Result<Self> {
        inner.write_all(&MAGIC)?;
        inner.write_all(&FORMAT_VERSION.to_le_bytes())?;
        inner.write_all(&(kind as u32).to_le_bytes())?;
        Ok(Writer { inner })
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.inner.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn tensor(&mut self, m: &Matrix) -> Result<()> {
        self.u32(m.rows() as u32)?;
        self.u32(m.cols() as u32)?;
        let mut buf = Vec::with_capacity(m.as_slice().len() * 4);
        for v in m.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates the header and checks the file kind.
    pub fn new(buf: &'a [u8], expected: FileKind) -> Result<Self> {
        if buf.len() < 16 {
            return Err(ClanError::CorruptCheckpoint(format!(
                "file is {} bytes, shorter than the 16-byte header",
                buf.len()
            )));
        }
        if buf[..8] != MAGIC {
            return Err(ClanError::CorruptCheckpoint("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(ClanError::VersionMismatch { found: version, expected: FORMAT_VERSION });
        }
        let kind = u32::from_le_bytes(buf[12..16].try_into().unwrap());
        match FileKind::from_u32(kind) {
            Some(k) if k == expected => Ok(Reader { buf, pos: 16 }),
            Some(k) => Err(ClanError::CorruptCheckpoint(format!(
                "expected kind {expected:?}, found {k:?}"
            ))),
            None => Err(ClanError::CorruptCheckpoint(format!("unknown file kind {kind}"))),
        }
    }

    pub fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
        let mut f = std::fs::File::open(path)?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        Ok(buf)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(ClanError::CorruptCheckpoint(format!(
                "truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| ClanError::CorruptCheckpoint("string is not UTF-8".into()))
    }

    pub fn tensor(&mut self) -> Result<Matrix> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| ClanError::CorruptCheckpoint("tensor size overflows".into()))?;
        let bytes = self.take(n)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }

    pub fn pos_marker(&self) -> usize {
        self.pos
    }

    pub fn rewind_to(&mut self, pos: usize) {
        self.pos = pos.min(self.buf.len());
    }

    /// Errors if bytes remain after the last field.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(ClanError::CorruptCheckpoint(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
