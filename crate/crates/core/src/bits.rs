//! Binary sequences.

use std::fmt;
use std::ops::Deref;

/// An ordered run of binary symbols, stored one symbol per byte (`0` or `1`).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSequence(Vec<u8>);

impl BitSequence {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a sequence from arbitrary bytes, mapping any non-zero byte to `1`.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        Self(bits.into_iter().map(|b| u8::from(b != 0)).collect())
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self(bits.into_iter().map(u8::from).collect())
    }

    /// Parses `'0'`/`'1'` characters, panicking on anything else. Intended for
    /// literals in tests and examples; use [`crate::binarize::parse_bit_text`]
    /// for untrusted input.
    pub fn from_str_bits(s: &str) -> Self {
        Self(
            s.bytes()
                .map(|c| match c {
                    b'0' => 0,
                    b'1' => 1,
                    other => panic!("not a bit: {:?}", other as char),
                })
                .collect(),
        )
    }

    pub fn push(&mut self, bit: u8) {
        self.0.push(u8::from(bit != 0));
    }

    pub fn extend_from_slice(&mut self, bits: &[u8]) {
        self.0.extend(bits.iter().map(|&b| u8::from(b != 0)));
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// Number of `1` symbols.
    pub fn ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    /// Number of `0` symbols.
    pub fn zeros(&self) -> usize {
        self.0.len() - self.ones()
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|&b| 1 - b).collect())
    }

    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }
}

impl Deref for BitSequence {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for BitSequence {
    fn from(v: Vec<u8>) -> Self {
        Self::from_bits(v)
    }
}

impl From<&[u8]> for BitSequence {
    fn from(v: &[u8]) -> Self {
        Self::from_bits(v.iter().copied())
    }
}

impl FromIterator<u8> for BitSequence {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Self::from_bits(iter)
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 64 {
            write!(f, "BitSequence(\"{}\")", self.to_bit_string())
        } else {
            write!(f, "BitSequence(len={}, ones={})", self.0.len(), self.ones())
        }
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}
