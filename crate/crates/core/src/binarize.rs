//! Turning measurements, text, DNA and generator output into bits.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Encodes the direction of change between neighbours: `1` when the next
/// value is larger, `0` when smaller. Ties are broken by a fair coin drawn
/// from a generator seeded with `seed`, consumed only at ties, so strictly
/// monotone input never depends on the seed.
pub fn consecutive_comparison(values: &[f64], seed: u64) -> Result<BitSequence> {
    if values.len() < 2 {
        return Err(Error::TooFewValues { min: 2, got: values.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(values
        .windows(2)
        .map(|w| {
            if w[1] > w[0] {
                1
            } else if w[1] < w[0] {
                0
            } else {
                u8::from(rng.random_bool(0.5))
            }
        })
        .collect())
}

/// Reads one number per line. Blank lines and lines starting with `#` are
/// skipped; anything else must parse as a finite number.
pub fn parse_numeric_lines(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() || token.starts_with('#') {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return Err(Error::InvalidNumber { token: token.to_string(), line: i + 1 }),
        }
    }
    Ok(out)
}

/// Lengths in characters of the whitespace-separated words of `text`, with
/// leading and trailing punctuation stripped. Tokens that are pure
/// punctuation are dropped.
pub fn word_lengths(text: &str) -> Vec<usize> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).chars().count())
        .filter(|&n| n > 0)
        .collect()
}

/// What to do with characters outside `{A, C, G, T}` in DNA input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InvalidBase {
    #[default]
    Reject,
    Skip,
}

/// Assignment of 2-bit codes to the four bases. The default is
/// `A→00, C→01, G→10, T→11`; any permutation can be supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DnaMap {
    codes: [u8; 4],
}

impl Default for DnaMap {
    fn default() -> Self {
        Self { codes: [0, 1, 2, 3] }
    }
}

impl DnaMap {
    const BASES: [char; 4] = ['A', 'C', 'G', 'T'];

    /// `codes[i]` is the 2-bit code of the i-th base in `A, C, G, T` order.
    pub fn new(codes: [u8; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &c in &codes {
            if c > 3 || seen[c as usize] {
                return Err(Error::InvalidDnaMap(format!("{codes:?} is not a permutation of 0..4")));
            }
            seen[c as usize] = true;
        }
        Ok(Self { codes })
    }

    /// Parses a mapping like `"A=00,C=01,G=10,T=11"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidDnaMap(spec.to_string());
        let mut codes = [u8::MAX; 4];
        for part in spec.split(',') {
            let (base, code) = part.trim().split_once('=').ok_or_else(bad)?;
            let mut chars = base.trim().chars();
            let b = chars.next().and_then(Self::base_index).ok_or_else(bad)?;
            if chars.next().is_some() || code.trim().len() != 2 {
                return Err(bad());
            }
            codes[b] = u8::from_str_radix(code.trim(), 2).map_err(|_| bad())?;
        }
        if codes.contains(&u8::MAX) {
            return Err(bad());
        }
        Self::new(codes)
    }

    fn base_index(c: char) -> Option<usize> {
        match c.to_ascii_uppercase() {
            'A' => Some(0),
            'C' => Some(1),
            'G' => Some(2),
            'T' => Some(3),
            _ => None,
        }
    }

    /// Appends the code of `base` (case-insensitive). Returns `false` for a
    /// character that is not a base.
    fn push_base(&self, base: char, out: &mut Vec<u8>) -> bool {
        match Self::base_index(base) {
            Some(i) => {
                let code = self.codes[i];
                out.push(code >> 1);
                out.push(code & 1);
                true
            }
            None => false,
        }
    }

    fn base_of(&self, code: u8) -> char {
        let i = self.codes.iter().position(|&c| c == code).expect("codes form a permutation");
        Self::BASES[i]
    }

    /// Encodes a bare base string. Whitespace counts as an invalid character.
    pub fn encode(&self, bases: &str, invalid: InvalidBase) -> Result<BitSequence> {
        let mut out = Vec::with_capacity(2 * bases.len());
        encode_lines(self, bases.lines().enumerate(), invalid, &mut out)?;
        Ok(BitSequence::from(out))
    }

    /// Inverse of [`DnaMap::encode`], producing upper-case bases.
    pub fn decode(&self, bits: &[u8]) -> Result<String> {
        if bits.len() % 2 != 0 {
            return Err(Error::OddLength(bits.len()));
        }
        Ok(bits.chunks_exact(2).map(|p| self.base_of((p[0] << 1) | (p[1] & 1))).collect())
    }
}

fn encode_lines<'a>(
    map: &DnaMap,
    lines: impl Iterator<Item = (usize, &'a str)>,
    invalid: InvalidBase,
    out: &mut Vec<u8>,
) -> Result<()> {
    for (i, line) in lines {
        for (col, c) in line.chars().enumerate() {
            if !map.push_base(c, out) && invalid == InvalidBase::Reject {
                return Err(Error::InvalidCharacter { found: c, line: i + 1, column: col + 1 });
            }
        }
    }
    Ok(())
}

/// Encodes `bases` with the default map, rejecting anything but `ACGT`.
pub fn dna_to_bits(bases: &str) -> Result<BitSequence> {
    DnaMap::default().encode(bases, InvalidBase::Reject)
}

/// Inverse of [`dna_to_bits`].
pub fn bits_to_dna(bits: &[u8]) -> Result<String> {
    DnaMap::default().decode(bits)
}

/// Encodes FASTA text: header lines starting with `>` are skipped and the
/// remaining lines are concatenated with surrounding whitespace removed.
/// Error positions refer to the original text.
pub fn fasta_to_bits(text: &str, map: &DnaMap, invalid: InvalidBase) -> Result<BitSequence> {
    let mut out = Vec::with_capacity(2 * text.len());
    let lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('>'))
        .map(|(i, l)| (i, l.trim_end()));
    encode_lines(map, lines, invalid, &mut out)?;
    Ok(BitSequence::from(out))
}

/// Writes one FASTA record with lines of at most `width` bases.
pub fn write_fasta<W: Write>(mut out: W, header: &str, bases: &str, width: usize) -> io::Result<()> {
    writeln!(out, ">{header}")?;
    for chunk in bases.as_bytes().chunks(width.max(1)) {
        out.write_all(chunk)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

const RANDU_MODULUS_MASK: u32 = (1 << 31) - 1;

/// The RANDU linear congruential generator `x ← 65539·x mod 2³¹`, yielding
/// successive states.
#[derive(Clone, Debug)]
pub struct Randu {
    state: u32,
}

impl Randu {
    pub fn new(seed: u32) -> Result<Self> {
        let state = seed & RANDU_MODULUS_MASK;
        if state % 2 == 0 {
            return Err(Error::EvenRanduSeed(seed));
        }
        Ok(Self { state })
    }
}

impl Iterator for Randu {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        self.state = self.state.wrapping_mul(65539) & RANDU_MODULUS_MASK;
        Some(self.state)
    }
}

/// `count` bits, each `1` when more than half of the 31 state bits of the
/// next RANDU output are set.
pub fn randu_bits(count: usize, seed: u32) -> Result<BitSequence> {
    if count == 0 {
        return Err(Error::LengthTooSmall { min: 1, got: 0 });
    }
    Ok(Randu::new(seed)?.take(count).map(|s| u8::from(s.count_ones() >= 16)).collect())
}

/// Reads `'0'`/`'1'` characters, ignoring whitespace.
pub fn parse_bit_text(text: &str) -> Result<BitSequence> {
    let mut out = Vec::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        for (col, c) in line.chars().enumerate() {
            match c {
                '0' => out.push(0),
                '1' => out.push(1),
                c if c.is_whitespace() => {}
                c => return Err(Error::InvalidCharacter { found: c, line: i + 1, column: col + 1 }),
            }
        }
    }
    Ok(BitSequence::from(out))
}

/// Writes bits as `'0'`/`'1'` text, `width` per line.
pub fn write_bit_text<W: Write>(mut out: W, bits: &[u8], width: usize) -> io::Result<()> {
    for chunk in bits.chunks(width.max(1)) {
        let line: Vec<u8> = chunk.iter().map(|&b| if b == 0 { b'0' } else { b'1' }).collect();
        out.write_all(&line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitSequence {
        BitSequence::from_str_bits(s)
    }

    #[test]
    fn comparisons_of_monotone_runs() {
        assert_eq!(consecutive_comparison(&[1.0, 2.0, 3.0], 0).unwrap(), bits("11"));
        assert_eq!(consecutive_comparison(&[3.0, 2.0, 1.0], 0).unwrap(), bits("00"));
        for seed in 0..20 {
            assert_eq!(consecutive_comparison(&[1.0, 5.0, 2.0, 8.0], seed).unwrap(), bits("101"));
        }
        assert_eq!(consecutive_comparison(&[1.0], 0), Err(Error::TooFewValues { min: 2, got: 1 }));
    }

    #[test]
    fn ties_are_a_seeded_fair_coin() {
        let draw = |seed| consecutive_comparison(&[2.0, 2.0], seed).unwrap()[0];
        assert_eq!(draw(7), draw(7));
        let ones: usize = (0..10_000u64).map(|s| draw(s) as usize).sum();
        // 4 standard deviations of a fair binomial with n = 10^4.
        assert!((ones as f64 - 5000.0).abs() < 200.0, "{ones}");
    }

    #[test]
    fn numeric_lines() {
        let v = parse_numeric_lines("# rr\n812\n\n  790.5 \n").unwrap();
        assert_eq!(v, vec![812.0, 790.5]);
        assert_eq!(
            parse_numeric_lines("1\nx2\n"),
            Err(Error::InvalidNumber { token: "x2".into(), line: 2 })
        );
        assert!(parse_numeric_lines("nan\n").is_err());
    }

    #[test]
    fn words_lose_outer_punctuation() {
        assert_eq!(word_lengths("\"Hello,\" she said -- well-known."), vec![5, 3, 4, 10]);
    }

    #[test]
    fn dna_map() {
        assert_eq!(dna_to_bits("ACGT").unwrap(), bits("00011011"));
        assert_eq!(dna_to_bits("").unwrap(), bits(""));
        assert_eq!(dna_to_bits("acgt").unwrap(), bits("00011011"));
        assert_eq!(
            dna_to_bits("ACNT"),
            Err(Error::InvalidCharacter { found: 'N', line: 1, column: 3 })
        );
        let skip = DnaMap::default().encode("ACNT", InvalidBase::Skip).unwrap();
        assert_eq!(skip, bits("000111"));
        assert_eq!(bits_to_dna(&bits("00011011")).unwrap(), "ACGT");
        assert_eq!(bits_to_dna(&bits("001")), Err(Error::OddLength(3)));
    }

    #[test]
    fn custom_dna_map() {
        let m = DnaMap::parse("A=11, C=10, G=01, T=00").unwrap();
        assert_eq!(m.encode("AT", InvalidBase::Reject).unwrap(), bits("1100"));
        assert_eq!(m.decode(&bits("0011")).unwrap(), "TA");
        assert!(DnaMap::new([0, 0, 1, 2]).is_err());
        assert!(DnaMap::parse("A=00,C=01,G=10").is_err());
        assert!(DnaMap::parse("A=00,C=01,G=10,U=11").is_err());
    }

    #[test]
    fn fasta_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bases: String = (0..1000).map(|_| DnaMap::BASES[rng.random_range(0..4)]).collect();
        let mut text = Vec::new();
        write_fasta(&mut text, "chr test", &bases, 60).unwrap();
        let text = String::from_utf8(text).unwrap();
        let b = fasta_to_bits(&text, &DnaMap::default(), InvalidBase::Reject).unwrap();
        assert_eq!(b.len(), 2000);
        assert_eq!(bits_to_dna(&b).unwrap(), bases);
    }

    #[test]
    fn fasta_errors_point_into_the_file() {
        let text = ">h\nACGT\nAC-T\n";
        assert_eq!(
            fasta_to_bits(text, &DnaMap::default(), InvalidBase::Reject),
            Err(Error::InvalidCharacter { found: '-', line: 3, column: 3 })
        );
    }

    #[test]
    fn randu_recurrence() {
        let mut g = Randu::new(1).unwrap();
        assert_eq!(g.next(), Some(65539));
        assert_eq!(g.next(), Some(393225));
        assert_eq!(65539u32.count_ones(), 3);
        assert_eq!(randu_bits(1, 1).unwrap(), bits("0"));
        assert_eq!(randu_bits(500, 12345).unwrap(), randu_bits(500, 12345).unwrap());
        assert_eq!(Randu::new(2).unwrap_err(), Error::EvenRanduSeed(2));
        assert!(randu_bits(0, 1).is_err());
    }

    #[test]
    fn bit_text() {
        assert_eq!(parse_bit_text("01 10\n").unwrap(), bits("0110"));
        assert_eq!(parse_bit_text("").unwrap(), bits(""));
        assert_eq!(
            parse_bit_text("01\n0x"),
            Err(Error::InvalidCharacter { found: 'x', line: 2, column: 2 })
        );
        let b = bits("0110100111010");
        let mut out = Vec::new();
        write_bit_text(&mut out, &b, 5).unwrap();
        assert_eq!(out, b"01101\n00111\n010\n");
        assert_eq!(parse_bit_text(std::str::from_utf8(&out).unwrap()).unwrap(), b);
    }
}
