//! Information-theoretic primitives shared by every coder: binary entropy,
//! relative entropy, the iterated-logarithm integer code length and the
//! Krichevsky-Trofimov (KT) estimator.
//!
//! All lengths are ideal code lengths in bits (`-log2` of a probability) and
//! are never rounded.

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `x * log2(x)` with the convention `0 log 0 = 0`.
#[inline]
fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy `H(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { value: p, range: "[0, 1]" });
    }
    Ok(binary_entropy_unchecked(p))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Relative entropy `D(p_hat || p)` in bits between two Bernoulli laws.
///
/// `p` must lie strictly inside `(0, 1)`: a typical model may not assign zero
/// probability to a symbol that can occur.
pub fn relative_entropy(p_hat: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidProbability { value: p_hat, range: "[0, 1]" });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability { value: p, range: "(0, 1)" });
    }
    Ok(relative_entropy_unchecked(p_hat, p))
}

#[inline]
pub(crate) fn relative_entropy_unchecked(p_hat: f64, p: f64) -> f64 {
    let q_hat = 1.0 - p_hat;
    let mut d = 0.0;
    if p_hat > 0.0 {
        d += p_hat * (p_hat / p).log2();
    }
    if q_hat > 0.0 {
        d += q_hat * (q_hat / (1.0 - p)).log2();
    }
    d.max(0.0)
}

/// Elias-style `log* l = log l + log log l + ...`, summing the iterated base-2
/// logarithms while they stay strictly positive.
pub fn log_star(l: u64) -> Result<f64> {
    if l < 1 {
        return Err(Error::LengthTooSmall { min: 1, got: l as usize });
    }
    Ok(log_star_unchecked(l))
}

/// `log*` with `log*(0) = 0`, used for depth penalties where `D = 0` is legal.
pub(crate) fn log_star_unchecked(l: u64) -> f64 {
    let mut total = 0.0;
    let mut x = (l.max(1) as f64).log2();
    while x > 0.0 {
        total += x;
        x = x.log2();
    }
    total
}

/// Counts of `0`s (`a`) and `1`s (`b`) seen in some context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct KtCounts {
    pub a: u64,
    pub b: u64,
}

impl KtCounts {
    pub const fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }

    /// Counts of a bit slice.
    pub fn of(bits: &[u8]) -> Self {
        let b = bits.iter().filter(|&&x| x != 0).count() as u64;
        Self { a: bits.len() as u64 - b, b }
    }

    pub const fn total(&self) -> u64 {
        self.a + self.b
    }

    pub fn record(&mut self, bit: u8) {
        if bit == 0 {
            self.a += 1;
        } else {
            self.b += 1;
        }
    }

    pub fn count(&self, bit: u8) -> u64 {
        if bit == 0 {
            self.a
        } else {
            self.b
        }
    }

    /// Sequential KT probability of `bit` given these counts.
    #[inline]
    pub fn predict(&self, bit: u8) -> f64 {
        (self.count(bit) as f64 + 0.5) / (self.total() as f64 + 1.0)
    }

    /// Natural log of the KT block probability `P_e(a, b)`.
    pub fn ln_block_probability(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        let a = self.a as f64;
        let b = self.b as f64;
        libm::lgamma(a + 0.5) + libm::lgamma(b + 0.5) - libm::lgamma(a + b + 1.0) - LN_PI
    }

    /// `-log2 P_e(a, b)`.
    pub fn block_codelength(&self) -> f64 {
        -self.ln_block_probability() / std::f64::consts::LN_2
    }
}

/// KT predictive probability of `next_symbol`.
pub fn kt_predict(counts: KtCounts, next_symbol: u8) -> f64 {
    counts.predict(next_symbol)
}

/// Code length in bits of any sequence with the given counts under the KT
/// estimator. Independent of symbol order.
pub fn kt_block_codelength(counts: KtCounts) -> f64 {
    counts.block_codelength()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // 40-digit reference value
        assert!(close(binary_entropy(0.3).unwrap(), 0.881_290_899_230_692_6, 1e-15));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn relative_entropy_values() {
        assert_eq!(relative_entropy(0.5, 0.5).unwrap(), 0.0);
        assert!(close(relative_entropy(1.0, 0.5).unwrap(), 1.0, 1e-15));
        assert!(close(relative_entropy(0.8, 0.5).unwrap(), 0.278_071_905_112_637_65, 1e-15));
        // two-term definition evaluated separately
        let two_term = 0.8 * (0.8f64 / 0.5).log2() + 0.2 * (0.2f64 / 0.5).log2();
        assert!(close(relative_entropy(0.8, 0.5).unwrap(), two_term, 1e-15));
        assert!(relative_entropy(0.3, 0.0).is_err());
        assert!(relative_entropy(0.3, 1.0).is_err());
        assert!(relative_entropy(1.2, 0.5).is_err());
    }

    #[test]
    fn relative_entropy_positive_off_diagonal() {
        for i in 0..=20 {
            for j in 1..20 {
                let (ph, p) = (i as f64 / 20.0, j as f64 / 20.0);
                let d = relative_entropy(ph, p).unwrap();
                if i == j {
                    assert!(d.abs() < 1e-15);
                } else {
                    assert!(d > 0.0, "D({ph}||{p}) = {d}");
                }
            }
        }
    }

    #[test]
    fn log_star_values() {
        assert_eq!(log_star(1).unwrap(), 0.0);
        assert_eq!(log_star(2).unwrap(), 1.0);
        assert_eq!(log_star(16).unwrap(), 7.0);
        assert!(log_star(0).is_err());
        let mut prev = 0.0;
        for l in 1..5000u64 {
            let v = log_star(l).unwrap();
            assert!(v >= prev, "log* decreased at {l}");
            if l >= 2 {
                assert!(v >= (l as f64).log2());
            }
            prev = v;
        }
    }

    #[test]
    fn kt_predict_values() {
        assert_eq!(kt_predict(KtCounts::new(0, 0), 1), 0.5);
        assert_eq!(kt_predict(KtCounts::new(1, 0), 1), 0.25);
        assert_eq!(kt_predict(KtCounts::new(1, 2), 0), 3.0 / 8.0);
        let c = KtCounts::new(7, 3);
        assert!(close(c.predict(0) + c.predict(1), 1.0, 1e-15));
    }

    #[test]
    fn kt_block_values() {
        assert_eq!(kt_block_codelength(KtCounts::new(0, 0)), 0.0);
        assert!(close(kt_block_codelength(KtCounts::of(&[0, 1, 1, 0])), -(3.0f64 / 128.0).log2(), 1e-12));
        let mut prod = 1.0f64;
        for k in 0..8 {
            prod *= (k as f64 + 0.5) / (k as f64 + 1.0);
        }
        assert!(close(kt_block_codelength(KtCounts::new(8, 0)), -prod.log2(), 1e-12));
    }

    #[test]
    fn kt_sequential_matches_block() {
        // every sequence of length <= 12
        for len in 0..=12usize {
            for word in 0u32..(1 << len) {
                let mut counts = KtCounts::default();
                let mut ln_p = 0.0f64;
                for i in 0..len {
                    let bit = ((word >> i) & 1) as u8;
                    ln_p += counts.predict(bit).ln();
                    counts.record(bit);
                }
                let block = counts.ln_block_probability();
                let rel = if block == 0.0 { ln_p.abs() } else { ((ln_p - block) / block).abs() };
                assert!(rel < 1e-9, "len {len} word {word}: {ln_p} vs {block}");
            }
        }
    }

    #[test]
    fn kt_symmetry_and_redundancy_bound() {
        for n in 1..=64u64 {
            for a in 0..=n {
                let b = n - a;
                let ab = kt_block_codelength(KtCounts::new(a, b));
                let ba = kt_block_codelength(KtCounts::new(b, a));
                assert!(close(ab, ba, 1e-12));
                let h = binary_entropy(a as f64 / n as f64).unwrap();
                let bound = n as f64 * h + 0.5 * (n as f64).log2() + 1.0;
                assert!(ab <= bound + 1e-12, "a={a} b={b}: {ab} > {bound}");
            }
        }
    }
}
