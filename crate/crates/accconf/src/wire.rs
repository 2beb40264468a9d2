//! Shared helpers for the binary file formats.
//!
//! All formats use big-endian fixed-width integers and length-prefixed
//! (u32 byte count) big-endian unsigned big integers.

use num_bigint::BigUint;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("truncated input while reading {0}")]
    Truncated(&'static str),
    #[error("bad magic, expected {0:?}")]
    BadMagic(&'static str),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("{0}")]
    Invalid(&'static str),
}

pub fn put_uint(buf: &mut Vec<u8>, value: &BigUint) {
    let bytes = value.to_bytes_be();
    buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    buf.extend_from_slice(&bytes);
}

pub fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    buf.extend_from_slice(bytes);
}

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub fn expect_magic(&mut self, magic: &'static str) -> Result<(), WireError> {
        let got = self.take(magic.len(), "magic")?;
        if got != magic.as_bytes() {
            return Err(WireError::BadMagic(magic));
        }
        Ok(())
    }

    pub fn u8(&mut self, what: &'static str) -> Result<u8, WireError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &'static str) -> Result<u16, WireError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, WireError> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64, WireError> {
        let b = self.take(8, what)?;
        let mut arr = [0u8; 8];
        arr.copy_from_slice(b);
        Ok(u64::from_be_bytes(arr))
    }

    pub fn uint(&mut self, what: &'static str) -> Result<BigUint, WireError> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        Ok(BigUint::from_bytes_be(bytes))
    }

    pub fn bytes(&mut self, what: &'static str) -> Result<&'a [u8], WireError> {
        let len = self.u32(what)? as usize;
        self.take(len, what)
    }

    pub fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated(what));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn finish(&self, what: &'static str) -> Result<(), WireError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(WireError::Invalid(what))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_round_trip() {
        let mut buf = Vec::new();
        let v = BigUint::from(0xdead_beef_u64);
        put_uint(&mut buf, &v);
        let mut r = Reader::new(&buf);
        assert_eq!(r.uint("v").unwrap(), v);
        r.finish("trailing").unwrap();
    }

    #[test]
    fn truncation_is_detected() {
        let mut buf = Vec::new();
        put_uint(&mut buf, &BigUint::from(1234u32));
        buf.pop();
        let mut r = Reader::new(&buf);
        assert!(r.uint("v").is_err());
    }
}
