//! Packed bit strings.
//!
//! Bit `i` lives in word `i / 64` at position `i % 64` (least significant
//! first). Serialized bytes therefore hold bit `i` at byte `i / 8`, position
//! `i % 8`: little-endian within bytes.

use rand::RngCore;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({})", self.to_string01())
        } else {
            write!(f, "BitString(len={})", self.len)
        }
    }
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// Takes ownership of packed words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.words[i / 64] |= 1 << (i % 64);
            }
        }
        s
    }

    /// Parses a string of `'0'`/`'1'` characters, first character = bit 0.
    pub fn from_str01(s: &str) -> Option<Self> {
        let bools: Option<Vec<bool>> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bools.map(|b| Self::from_bools(&b))
    }

    pub fn to_string01(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bytes_le(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() * 8 < len {
            return None;
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, chunk) in bytes.chunks(8).take(words.len()).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(buf);
        }
        Some(Self::from_words(words, len))
    }

    pub fn to_bytes_le(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len.div_ceil(8));
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Self {
        let words = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        Self::from_words(words, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if value {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_msb_first(&mut self, value: u64, width: u32) {
        for b in (0..width).rev() {
            self.push((value >> b) & 1 == 1);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.words[i / 64] >> (i % 64)) & 1 == 1)
    }

    /// Bits `[start, start + len)` as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len);
        let mut out = Vec::with_capacity(len.div_ceil(64));
        let (w0, sh) = (start / 64, start % 64);
        for k in 0..len.div_ceil(64) {
            let lo = self.words.get(w0 + k).copied().unwrap_or(0);
            let word = if sh == 0 {
                lo
            } else {
                let hi = self.words.get(w0 + k + 1).copied().unwrap_or(0);
                (lo >> sh) | (hi << (64 - sh))
            };
            out.push(word);
        }
        Self::from_words(out, len)
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Self {
            words,
            len: self.len,
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = BitString::new();
        for b in iter {
            s.push(b);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bytes_are_little_endian_within_bytes() {
        let s = BitString::from_str01("1000000001").unwrap();
        assert_eq!(s.to_bytes_le(), vec![0b0000_0001, 0b0000_0010]);
    }

    #[test]
    fn msb_first_packing() {
        let mut s = BitString::new();
        s.push_msb_first(0b101, 3);
        s.push_msb_first(0b0011, 4);
        assert_eq!(s.to_string01(), "1010011");
    }

    proptest! {
        #[test]
        fn byte_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let s = BitString::from_bools(&bits);
            let back = BitString::from_bytes_le(&s.to_bytes_le(), bits.len()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn slice_matches_bits(bits in proptest::collection::vec(any::<bool>(), 1..300), a in 0usize..300, l in 0usize..300) {
            let s = BitString::from_bools(&bits);
            let start = a % bits.len();
            let len = l % (bits.len() - start + 1);
            let sub = s.slice(start, len);
            prop_assert_eq!(sub, BitString::from_bools(&bits[start..start + len]));
        }
    }
}
