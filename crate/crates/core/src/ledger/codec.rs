//! Canonical byte layout shared by transactions, blocks and dump files.
//!
//! Integers are 8-byte big-endian, amounts 16-byte big-endian, list counts and
//! byte-string lengths 4-byte big-endian, addresses 33 raw bytes. A digest is
//! one length byte followed by its raw bytes; length 0 marks an absent digest.

use thiserror::Error;

use super::Amount;
use crate::crypto::{Address, Digest, Signature, ADDRESS_LEN};

pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unexpected end of input at byte {0}")]
    UnexpectedEof(usize),
    #[error("unsupported version byte {0}")]
    BadVersion(u8),
    #[error("unknown tag {tag} at byte {offset}")]
    BadTag { offset: usize, tag: u8 },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("malformed address at byte {0}")]
    BadAddress(usize),
}

#[derive(Default)]
pub struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn amount(&mut self, a: Amount) -> &mut Self {
        self.buf.extend_from_slice(&a.0.to_be_bytes());
        self
    }

    pub fn raw(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.u32(b.len() as u32).raw(b)
    }

    pub fn address(&mut self, a: &Address) -> &mut Self {
        self.raw(&a.0)
    }

    pub fn digest(&mut self, d: Option<&Digest>) -> &mut Self {
        match d {
            None => self.u8(0),
            Some(d) => self.u8(d.0.len() as u8).raw(&d.0),
        }
    }

    pub fn signature(&mut self, s: &Signature) -> &mut Self {
        self.bytes(&s.0)
    }

    pub fn count(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.data.len() - self.pos < n {
            return Err(CodecError::UnexpectedEof(self.pos));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn amount(&mut self) -> Result<Amount, CodecError> {
        Ok(Amount(u128::from_be_bytes(self.take(16)?.try_into().unwrap())))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn address(&mut self) -> Result<Address, CodecError> {
        let at = self.pos;
        let raw: [u8; ADDRESS_LEN] = self.take(ADDRESS_LEN)?.try_into().unwrap();
        if raw[0] != 2 && raw[0] != 3 {
            return Err(CodecError::BadAddress(at));
        }
        Ok(Address(raw))
    }

    pub fn digest(&mut self) -> Result<Option<Digest>, CodecError> {
        let n = self.u8()? as usize;
        if n == 0 {
            return Ok(None);
        }
        Ok(Some(Digest(self.take(n)?.to_vec())))
    }

    pub fn signature(&mut self) -> Result<Signature, CodecError> {
        Ok(Signature(self.bytes()?.to_vec()))
    }

    pub fn version(&mut self) -> Result<(), CodecError> {
        match self.u8()? {
            VERSION => Ok(()),
            v => Err(CodecError::BadVersion(v)),
        }
    }

    /// Counts are bounded by the remaining input so corrupt lengths cannot
    /// trigger huge allocations.
    pub fn count(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()? as usize;
        if n > self.data.len() - self.pos {
            return Err(CodecError::UnexpectedEof(self.pos));
        }
        Ok(n)
    }

    pub fn end(&self) -> Result<(), CodecError> {
        match self.data.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}
