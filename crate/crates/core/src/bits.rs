//! Packed bit vectors over GF(2).
//!
//! Bit `i` lives in word `i / 64` at position `63 - i % 64`, so index 0 is the
//! most significant bit of the first word. This matches the external hex
//! encoding: index 0 is the most significant bit of the first byte. Bits past
//! `len` in the last word are always zero.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid hex string: {0}")]
    Hex(String),
    #[error("hex string holds {available} bits, need {expected}")]
    Length { expected: usize, available: usize },
    #[error("padding bits after position {0} are not zero")]
    Padding(usize),
}

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
fn mask(i: usize) -> u64 {
    1u64 << (63 - (i & 63))
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Self {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        bits.clear_tail();
        bits
    }

    pub fn with_capacity(len: usize) -> Self {
        Self {
            words: Vec::with_capacity(words_for(len)),
            len: 0,
        }
    }

    /// Uniformly random bits.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bits = Self {
            words: (0..words_for(len)).map(|_| rng.gen::<u64>()).collect(),
            len,
        };
        bits.clear_tail();
        bits
    }

    /// Builds from packed words, discarding anything past `len`.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        let mut bits = Self { words, len };
        bits.clear_tail();
        bits
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        if len == 0 {
            return Self::new();
        }
        Self::from_words(vec![value << (64 - len)], len)
    }

    /// Inverse of [`Bits::from_u64`]; requires `len() <= 64`.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        if self.len == 0 {
            0
        } else {
            self.words[0] >> (64 - self.len)
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self::from_bytes_len(bytes, bytes.len() * 8)
    }

    /// First `len` bits of `bytes`; `bytes` must hold at least `len` bits.
    pub fn from_bytes_len(bytes: &[u8], len: usize) -> Self {
        assert!(bytes.len() * 8 >= len);
        let mut words = Vec::with_capacity(words_for(len));
        let mut chunks = bytes[..len.div_ceil(8)].chunks(8);
        for chunk in chunks.by_ref() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words.push(u64::from_be_bytes(buf));
        }
        Self::from_words(words, len)
    }

    /// Packs into `ceil(len / 8)` bytes, zero-padded at the end.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes + 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(nbytes);
        out
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// Parses the encoding produced by [`Bits::to_hex`] for a vector of `len`
    /// bits. The string must have exactly `ceil(len / 8)` bytes and zero padding.
    pub fn from_hex(s: &str, len: usize) -> Result<Self, BitsError> {
        let bytes = hex::decode(s).map_err(|e| BitsError::Hex(e.to_string()))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(BitsError::Length {
                expected: len,
                available: bytes.len() * 8,
            });
        }
        let bits = Self::from_bytes_len(&bytes, len);
        if bits.to_bytes() != bytes {
            return Err(BitsError::Padding(len));
        }
        Ok(bits)
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut bits = Self::new();
        for b in iter {
            bits.push(b);
        }
        bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] & mask(i) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if value {
            self.words[i >> 6] |= mask(i);
        } else {
            self.words[i >> 6] &= !mask(i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i >> 6] ^= mask(i);
    }

    pub fn push(&mut self, value: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if value {
            let i = self.len - 1;
            self.words[i >> 6] |= mask(i);
        }
    }

    pub fn extend_from(&mut self, other: &Bits) {
        if self.len & 63 == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of the set bits, ascending.
    pub fn ones_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let lz = w.leading_zeros() as usize;
                out.push(wi * 64 + lz);
                w &= !(1u64 << (63 - lz));
            }
        }
        out
    }

    pub fn hamming_distance(&self, other: &Bits) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// The first `k` bits.
    pub fn prefix(&self, k: usize) -> Bits {
        assert!(k <= self.len);
        Self::from_words(self.words[..words_for(k)].to_vec(), k)
    }

    /// Bits at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Bits {
        let mut out = Bits::zeros(positions.len());
        for (k, &p) in positions.iter().enumerate() {
            if self.get(p) {
                out.words[k >> 6] |= mask(k);
            }
        }
        out
    }

    /// Bit order reversed: `out[k] = self[len - 1 - k]`.
    pub fn reversed(&self) -> Bits {
        let mut out = Bits::zeros(self.len);
        for p in self.ones_positions() {
            let k = self.len - 1 - p;
            out.words[k >> 6] |= mask(k);
        }
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (64 - rem);
            }
        }
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
            write!(f, "Bits({s})")
        } else {
            write!(f, "Bits(len={}, hex={}..)", self.len, &self.to_hex()[..32])
        }
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bools(iter)
    }
}

/// Parses a literal like `"1011"`; test and example convenience.
impl std::str::FromStr for Bits {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::Hex(format!("unexpected character {other:?}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn msb_first_byte_layout() {
        let bits = b("10000000");
        assert_eq!(bits.to_bytes(), vec![0x80]);
        assert_eq!(b("1").to_hex(), "80");
        assert_eq!(b("000000001").to_hex(), "0080");
        assert_eq!(Bits::from_bytes(&[0xa5]), b("10100101"));
    }

    #[test]
    fn hex_rejects_bad_padding_and_length() {
        assert_eq!(Bits::from_hex("81", 1), Err(BitsError::Padding(1)));
        assert!(matches!(Bits::from_hex("80", 9), Err(BitsError::Length { .. })));
        assert!(matches!(Bits::from_hex("zz", 8), Err(BitsError::Hex(_))));
    }

    #[test]
    fn u64_round_trip() {
        assert_eq!(Bits::from_u64(0b101, 3), b("101"));
        assert_eq!(b("0110").to_u64(), 6);
        assert_eq!(Bits::from_u64(u64::MAX, 64).count_ones(), 64);
    }

    #[test]
    fn ops_across_word_boundary() {
        let mut x = Bits::zeros(130);
        x.set(0, true);
        x.set(64, true);
        x.set(129, true);
        assert_eq!(x.ones_positions(), vec![0, 64, 129]);
        assert_eq!(x.reversed().ones_positions(), vec![0, 65, 129]);
        assert_eq!(x.select(&[129, 1, 64]), b("101"));
        assert_eq!(x.prefix(65).count_ones(), 2);
        let mut y = Bits::ones(130);
        y.xor_assign(&x);
        assert_eq!(y.count_ones(), 127);
        assert_eq!(x.hamming_distance(&Bits::zeros(130)), 3);
    }

    #[test]
    fn extend_unaligned() {
        let mut x = b("101");
        x.extend_from(&b("0011"));
        assert_eq!(x, b("1010011"));
        let mut z = Bits::new();
        z.extend_from(&x);
        assert_eq!(z, x);
    }

    proptest! {
        #[test]
        fn hex_round_trip(v in proptest::collection::vec(any::<bool>(), 0..300)) {
            let bits = Bits::from_bools(v.iter().copied());
            let back = Bits::from_hex(&bits.to_hex(), bits.len()).unwrap();
            prop_assert_eq!(&back, &bits);
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), v);
        }
    }
}
