//! Incremental coder that tracks CTW code lengths for every depth
//! `0..=max_depth` at once over a growing window.
//!
//! Each node stores, for every tree depth `D` deeper than itself, the
//! posterior weights of its two branches (`w` for "stop here", `u` for
//! "split"). They are kept normalised in the linear domain, which turns a
//! CTW update into a handful of multiplications per node. Within a window a
//! node at depth `d` is the end of a truncated context only for the symbol
//! at window position `d`, so its terminal estimator always predicts 1/2.

use super::WindowCoder;
use crate::codelength::log_star_unchecked;

const NONE: u32 = u32::MAX;
const FLOOR: f64 = 1e-300;
const RESCALE_BELOW: f64 = 5.421010862427522e-20; // 2^-64
const RESCALE_BY: f64 = 1.8446744073709552e19; // 2^64

#[derive(Debug, Clone, Copy)]
struct Node {
    counts: [u32; 2],
    children: [u32; 2],
    weights: u32,
}

/// Lower bound on `log2 x` for positive normal `x`, off by at most 0.0861.
#[inline]
fn log2_floor_approx(x: f64) -> f64 {
    let raw = x.to_bits();
    let exp = ((raw >> 52) & 0x7ff) as i64 - 1023;
    let mantissa = f64::from_bits((raw & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    exp as f64 + mantissa - 1.0
}
const APPROX_SLACK: f64 = 0.0861;

#[inline]
fn floor(x: f64) -> f64 {
    if x < FLOOR {
        FLOOR
    } else {
        x
    }
}

/// Code lengths of a window for all context depths up to `max_depth`.
///
/// Weight slots of a node at depth `d` are laid out by tree depth
/// `d + 1 ..= max_depth`, so one node updates every tree in a single
/// contiguous pass.
#[derive(Debug, Clone)]
pub struct SequentialCoder {
    max_depth: usize,
    nodes: Vec<Node>,
    stop: Vec<f64>,
    split: Vec<f64>,
    history: Vec<u8>,
    path: Vec<u32>,
    pe: Vec<f64>,
    q: Vec<f64>,
    scaled: Vec<f64>,
    shift: Vec<f64>,
    recip: Vec<f64>,
    depth_cost: Vec<f64>,
}

impl SequentialCoder {
    pub fn new(max_depth: usize) -> Self {
        let mut coder = Self {
            max_depth,
            nodes: Vec::new(),
            stop: Vec::new(),
            split: Vec::new(),
            history: Vec::new(),
            path: Vec::with_capacity(max_depth + 1),
            pe: vec![0.0; max_depth + 1],
            q: vec![0.0; max_depth + 1],
            scaled: vec![1.0; max_depth + 1],
            shift: vec![0.0; max_depth + 1],
            recip: Vec::new(),
            depth_cost: (0..=max_depth as u64).map(log_star_unchecked).collect(),
        };
        coder.reset();
        coder
    }

    fn new_node(&mut self, depth: usize) -> u32 {
        let base = self.stop.len() as u32;
        let slots = self.max_depth - depth;
        self.stop.resize(self.stop.len() + slots, 0.5);
        self.split.resize(self.split.len() + slots, 0.5);
        self.nodes.push(Node { counts: [0, 0], children: [NONE; 2], weights: base });
        (self.nodes.len() - 1) as u32
    }
}

impl WindowCoder for SequentialCoder {
    fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn len(&self) -> usize {
        self.history.len()
    }

    /// Starts a new, empty window. Allocations are kept.
    fn reset(&mut self) {
        self.nodes.clear();
        self.stop.clear();
        self.split.clear();
        self.history.clear();
        self.scaled.iter_mut().for_each(|s| *s = 1.0);
        self.shift.iter_mut().for_each(|s| *s = 0.0);
        self.new_node(0);
    }

    /// Appends one symbol to the window.
    fn push(&mut self, bit: u8) {
        let bit = bit as usize & 1;
        let i = self.history.len();
        let reach = i.min(self.max_depth);
        while self.recip.len() <= i + 1 {
            let n = self.recip.len();
            self.recip.push(1.0 / (n as f64 + 1.0));
        }

        self.path.clear();
        self.path.push(0);
        let mut idx = 0u32;
        for d in 0..reach {
            let c = self.history[i - 1 - d] as usize;
            let next = self.nodes[idx as usize].children[c];
            idx = if next == NONE {
                let fresh = self.new_node(d + 1);
                self.nodes[idx as usize].children[c] = fresh;
                fresh
            } else {
                next
            };
            self.path.push(idx);
        }

        // Below `chain` every node has seen exactly the events of its parent,
        // so all of them predict alike and their weights stay at 1/2. A
        // fresh terminal node also predicts 1/2 on both branches.
        let mut chain = reach;
        while chain > 0 && self.nodes[self.path[chain - 1] as usize].counts == self.nodes[self.path[chain] as usize].counts {
            chain -= 1;
        }
        for d in 0..=chain {
            let counts = self.nodes[self.path[d] as usize].counts;
            let total = (counts[0] + counts[1]) as usize;
            self.pe[d] = (counts[bit] as f64 + 0.5) * self.recip[total];
        }
        let tail = self.pe[chain];
        self.q[chain..].iter_mut().for_each(|q| *q = tail);

        for d in (0..chain).rev() {
            self.q[d] = self.pe[d];
            let base = self.nodes[self.path[d] as usize].weights as usize;
            let len = self.max_depth - d;
            let stop = &mut self.stop[base..base + len];
            let split = &mut self.split[base..base + len];
            let q = &mut self.q[d + 1..];
            let pe = self.pe[d];
            for j in 0..len {
                let a = stop[j] * pe;
                let b = split[j] * q[j];
                let s = a + b;
                let r = 1.0 / s;
                stop[j] = floor(a * r);
                split[j] = floor(b * r);
                q[j] = s;
            }
        }

        for (s, (&q, shift)) in self.scaled.iter_mut().zip(self.q.iter().zip(self.shift.iter_mut())) {
            *s *= q;
            if *s < RESCALE_BELOW {
                *s *= RESCALE_BY;
                *shift += 64.0;
            }
        }

        for &n in &self.path {
            self.nodes[n as usize].counts[bit] += 1;
        }
        self.history.push(bit as u8);
    }

    /// CTW code length in bits of the window for one depth.
    fn codelength(&self, depth: usize) -> f64 {
        self.shift[depth] - self.scaled[depth].log2()
    }

    /// `min over D of (codelength(D) + log* D)` and the minimising depth
    /// (the smallest one on ties).
    fn best(&self) -> (f64, usize) {
        let approx = |d: usize| self.shift[d] - log2_floor_approx(self.scaled[d]) + self.depth_cost[d];
        let approx_min = (0..=self.max_depth).map(approx).fold(f64::INFINITY, f64::min);
        let mut best = (f64::INFINITY, 0);
        for d in 0..=self.max_depth {
            if approx(d) - APPROX_SLACK <= approx_min {
                let exact = self.codelength(d) + self.depth_cost[d];
                if exact < best.0 {
                    best = (exact, d);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctw::{BlockCoder, ContextTree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn approx_log_bounds() {
        for &x in &[1.0, 0.75, 0.5, 0.3, 1e-10, 5.6e-20, 0.999999] {
            let approx = log2_floor_approx(x);
            let exact = f64::log2(x);
            assert!(approx <= exact + 1e-15 && exact - approx <= APPROX_SLACK, "{x}");
        }
    }

    fn agrees_with_reference<C: WindowCoder>(coder: &mut C, x: &[u8]) {
        let max_depth = coder.max_depth();
        coder.reset();
        let mut trees: Vec<ContextTree> = (0..=max_depth).map(ContextTree::new).collect();
        for (i, &b) in x.iter().enumerate() {
            coder.push(b);
            let mut best = (f64::INFINITY, 0);
            for (depth, tree) in trees.iter_mut().enumerate() {
                let start = i.saturating_sub(depth);
                tree.update(&x[start..i], b);
                let got = coder.codelength(depth);
                assert!((got - tree.codelength()).abs() < 1e-9, "l={} D={depth}: {got} vs {}", i + 1, tree.codelength());
                let total = tree.codelength() + log_star_unchecked(depth as u64);
                if total < best.0 {
                    best = (total, depth);
                }
            }
            let (bits, depth) = coder.best();
            assert!((bits - best.0).abs() < 1e-9);
            assert!(depth == best.1 || (coder.codelength(depth) + log_star_unchecked(depth as u64) - best.0).abs() < 1e-9);
        }
        assert_eq!(coder.len(), x.len());
    }

    fn check_both(x: &[u8], max_depth: usize) {
        agrees_with_reference(&mut SequentialCoder::new(max_depth), x);
        agrees_with_reference(&mut BlockCoder::new(max_depth), x);
    }

    #[test]
    fn matches_reference_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<u8> = (0..300).map(|_| rng.random_bool(0.3) as u8).collect();
        check_both(&x, 6);
        check_both(&x[..20], 0);
        check_both(&x[..40], 1);
        let periodic: Vec<u8> = (0..400).map(|i| ((i % 3) == 0) as u8).collect();
        check_both(&periodic, 5);
        check_both(&[1; 600], 4);
        let long: Vec<u8> = (0..1000).map(|_| rng.random_bool(0.5) as u8).collect();
        check_both(&long, 12);
    }

    #[test]
    fn sequential_handles_long_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let x: Vec<u8> = (0..3000).map(|_| rng.random_bool(0.5) as u8).collect();
        agrees_with_reference(&mut SequentialCoder::new(3), &x);
    }

    #[test]
    fn reset_starts_over() {
        let mut coder = SequentialCoder::new(3);
        for b in [1, 0, 1, 1] {
            coder.push(b);
        }
        let first = coder.best();
        coder.reset();
        assert!(coder.is_empty());
        for b in [1, 0, 1, 1] {
            coder.push(b);
        }
        assert_eq!(coder.best(), first);
    }
}
