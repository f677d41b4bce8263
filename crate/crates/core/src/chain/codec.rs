//! Canonical byte serialization for everything that gets hashed.
//!
//! Layout rules:
//! - integers are fixed-width big-endian;
//! - hashes are written as their raw 32 bytes;
//! - byte strings and lists carry a `u32` big-endian length (or element count) prefix;
//! - structures write their fields in declaration order, preceded by a length-prefixed
//!   domain tag so that two structures with identical field bytes never collide.

use super::hash::{hash_bytes, Hash};

/// Append-only writer producing canonical bytes.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a structure with its domain tag.
    pub fn tagged(tag: &str) -> Self {
        let mut enc = Self::new();
        enc.str(tag);
        enc
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

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(u8::from(v))
    }

    pub fn hash(&mut self, h: &Hash) -> &mut Self {
        self.buf.extend_from_slice(h.as_bytes());
        self
    }

    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.u32(len_u32(data.len()));
        self.buf.extend_from_slice(data);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn opt<T: Canonical>(&mut self, v: Option<&T>) -> &mut Self {
        match v {
            None => self.u8(0),
            Some(inner) => {
                self.u8(1);
                inner.encode(self);
                self
            }
        }
    }

    pub fn list<T: Canonical>(&mut self, items: &[T]) -> &mut Self {
        self.u32(len_u32(items.len()));
        for item in items {
            item.encode(self);
        }
        self
    }

    pub fn put<T: Canonical + ?Sized>(&mut self, v: &T) -> &mut Self {
        v.encode(self);
        self
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn finish_hash(&self) -> Hash {
        hash_bytes(&self.buf)
    }
}

fn len_u32(len: usize) -> u32 {
    u32::try_from(len).expect("canonical field longer than u32::MAX")
}

/// Types with a canonical, implementation-independent byte encoding.
pub trait Canonical {
    fn encode(&self, enc: &mut Encoder);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.into_bytes()
    }

    fn canonical_hash(&self) -> Hash {
        hash_bytes(&self.canonical_bytes())
    }
}

impl Canonical for Hash {
    fn encode(&self, enc: &mut Encoder) {
        enc.hash(self);
    }
}

impl Canonical for u64 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(*self);
    }
}

impl Canonical for u32 {
    fn encode(&self, enc: &mut Encoder) {
        enc.u32(*self);
    }
}

impl Canonical for str {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(self);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_big_endian() {
        let mut enc = Encoder::new();
        enc.u32(1).u64(0x0102);
        assert_eq!(enc.as_slice(), &[0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 2]);
    }

    #[test]
    fn byte_strings_are_length_prefixed() {
        let mut enc = Encoder::new();
        enc.str("ab");
        assert_eq!(enc.as_slice(), &[0, 0, 0, 2, b'a', b'b']);
    }

    #[test]
    fn tags_separate_domains() {
        let mut a = Encoder::tagged("a");
        a.u64(7);
        let mut b = Encoder::tagged("b");
        b.u64(7);
        assert_ne!(a.finish_hash(), b.finish_hash());
    }

    #[test]
    fn list_prefix_disambiguates_concatenation() {
        let mut one = Encoder::new();
        one.list(&[1u64, 2]).list::<u64>(&[]);
        let mut two = Encoder::new();
        two.list(&[1u64]).list(&[2u64]);
        assert_ne!(one.as_slice(), two.as_slice());
    }
}
