//! Typical coder trained once with CTW and then frozen.
//!
//! Training runs ordinary CTW over the training sequences. Every internal
//! node then keeps the posterior weight of its memoryless estimator,
//! `w1 = P_e / (P_e + P_w(0s) P_w(1s))`, and prediction mixes the node's
//! own KT estimate with the deeper contexts using those weights instead of
//! 1/2. A context never seen in training predicts 1/2.

use crate::codelength::KtCounts;
use crate::ctw::ContextTree;
use crate::error::{Error, Result};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

/// Deepest context supported; paths are stored in a `u64`.
pub const MAX_FROZEN_DEPTH: usize = 63;

const MAGIC: &[u8; 8] = b"ATYPFRZ\0";
const VERSION: u32 = 1;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
struct FrozenNode {
    w1: f64,
    q1: f64,
    counts: KtCounts,
    children: [u32; 2],
}

impl FrozenNode {
    fn new(w1: f64, counts: KtCounts) -> Self {
        Self { w1, q1: counts.predict(1), counts, children: [NONE; 2] }
    }
}

/// Immutable predictive model. Safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenModel {
    depth: usize,
    nodes: Vec<FrozenNode>,
}

/// Trains on `sequences`. The first `depth` bits of each sequence only
/// provide context and are not coded.
pub fn train(sequences: &[&[u8]], depth: usize) -> Result<FrozenModel> {
    train_with_codelength(sequences, depth).map(|(model, _)| model)
}

/// As [`train`], also returning the adaptive CTW code length of the coded
/// training bits.
pub fn train_with_codelength(sequences: &[&[u8]], depth: usize) -> Result<(FrozenModel, f64)> {
    if sequences.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if depth > MAX_FROZEN_DEPTH {
        return Err(Error::DepthTooLarge { got: depth, max: MAX_FROZEN_DEPTH });
    }
    if sequences.iter().all(|s| s.len() <= depth) {
        return Err(Error::TrainingTooShort { depth });
    }
    let mut tree = ContextTree::new(depth);
    for seq in sequences {
        for i in depth..seq.len() {
            tree.update(&seq[i - depth..i], seq[i]);
        }
    }
    Ok((FrozenModel::from_tree(&tree), tree.codelength()))
}

impl FrozenModel {
    fn from_tree(tree: &ContextTree) -> Self {
        let depth = tree.max_depth();
        let mut nodes = Vec::with_capacity(tree.node_count());
        build(tree, 0, 0, depth, &mut nodes);
        Self { depth, nodes }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Training counts at the root.
    pub fn root_counts(&self) -> KtCounts {
        self.nodes[0].counts
    }

    /// Posterior weight of the memoryless model at the root.
    pub fn root_weight(&self) -> f64 {
        self.nodes[0].w1
    }

    /// Probability that the next bit is 1. `context` is oldest first; only
    /// its last `depth` bits are used. When the context runs out before the
    /// tree does, the deepest reached node predicts with its own estimate.
    pub fn predict(&self, context: &[u8]) -> f64 {
        let reach = context.len().min(self.depth);
        self.predict_from(0, 0, context, reach)
    }

    fn predict_from(&self, idx: usize, d: usize, context: &[u8], reach: usize) -> f64 {
        let node = &self.nodes[idx];
        if d == reach {
            return node.q1;
        }
        let bit = context[context.len() - 1 - d] as usize;
        let deeper = match node.children[bit] {
            NONE => 0.5,
            c => self.predict_from(c as usize, d + 1, context, reach),
        };
        node.w1 * node.q1 + (1.0 - node.w1) * deeper
    }

    /// Cost in bits of each symbol of `x`, coded with the preceding bits of
    /// `x` as context (a shorter context near the start).
    pub fn symbol_costs(&self, x: &[u8]) -> Vec<f64> {
        self.symbol_costs_after(x, &[])
    }

    /// As `symbol_costs`, with `preceding` placed before `x`.
    pub fn symbol_costs_after(&self, x: &[u8], preceding: &[u8]) -> Vec<f64> {
        let keep = preceding.len().min(self.depth);
        let mut history: Vec<u8> = preceding[preceding.len() - keep..].to_vec();
        history.extend_from_slice(x);
        (keep..history.len())
            .map(|i| {
                let ctx = &history[i.saturating_sub(self.depth)..i];
                let p1 = self.predict(ctx);
                -(if history[i] != 0 { p1 } else { 1.0 - p1 }).log2()
            })
            .collect()
    }

    /// Digest of the complete model state.
    pub fn state_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.depth.hash(&mut h);
        for n in &self.nodes {
            n.w1.to_bits().hash(&mut h);
            n.q1.to_bits().hash(&mut h);
            n.counts.hash(&mut h);
            n.children.hash(&mut h);
        }
        h.finish()
    }

    /// Writes the binary model format (see FORMATS.md).
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.depth as u32).to_le_bytes())?;
        out.write_all(&(self.nodes.len() as u64).to_le_bytes())?;
        let mut stack = vec![(0u32, 0u8, 0u64)];
        while let Some((idx, d, path)) = stack.pop() {
            let node = &self.nodes[idx as usize];
            out.write_all(&[d])?;
            out.write_all(&path.to_le_bytes())?;
            out.write_all(&node.w1.to_le_bytes())?;
            out.write_all(&node.counts.a.to_le_bytes())?;
            out.write_all(&node.counts.b.to_le_bytes())?;
            for bit in [1u64, 0] {
                let c = node.children[bit as usize];
                if c != NONE {
                    stack.push((c, d + 1, path | (bit << d)));
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    /// Reads a model written by `write_to`.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut buf = Vec::new();
        input.read_to_end(&mut buf).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let mut r = Reader { buf: &buf, pos: 0 };
        if r.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.u32().ok_or_else(|| bad("truncated header"))?;
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let depth = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        if depth > MAX_FROZEN_DEPTH {
            return Err(bad("depth too large"));
        }
        let count = r.u64().ok_or_else(|| bad("truncated header"))?;
        if count == 0 || count > (buf.len() / 33) as u64 {
            return Err(bad("implausible node count"));
        }
        let mut nodes: Vec<FrozenNode> = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let rec = (|| Some((r.take(1)?[0] as usize, r.u64()?, f64::from_bits(r.u64()?), r.u64()?, r.u64()?)))();
            let (d, path, w1, a, b) = rec.ok_or_else(|| bad("truncated node record"))?;
            if !(0.0..=1.0).contains(&w1) {
                return Err(bad("weight outside [0, 1]"));
            }
            if d > depth || (d < 64 && path >> d != 0) {
                return Err(bad("inconsistent context path"));
            }
            let node = FrozenNode::new(w1, KtCounts::new(a, b));
            if d == 0 {
                if !nodes.is_empty() {
                    return Err(bad("second root"));
                }
                nodes.push(node);
                continue;
            }
            let mut idx = 0usize;
            if nodes.is_empty() {
                return Err(bad("missing root"));
            }
            for level in 0..d - 1 {
                let bit = ((path >> level) & 1) as usize;
                match nodes[idx].children[bit] {
                    NONE => return Err(bad("node before its parent")),
                    c => idx = c as usize,
                }
            }
            let bit = ((path >> (d - 1)) & 1) as usize;
            if nodes[idx].children[bit] != NONE {
                return Err(bad("duplicate node"));
            }
            nodes[idx].children[bit] = nodes.len() as u32;
            nodes.push(node);
        }
        if r.pos != buf.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self { depth, nodes })
    }
}

fn build(tree: &ContextTree, src: usize, d: usize, depth: usize, out: &mut Vec<FrozenNode>) -> u32 {
    let node = tree.node(src);
    let w1 = if d == depth {
        1.0
    } else {
        let deeper: f64 = [0u8, 1].iter().filter_map(|&b| tree.child(src, b)).map(|c| c.ln_pw()).sum();
        1.0 / (1.0 + (deeper - node.ln_pe()).exp())
    };
    let me = out.len();
    out.push(FrozenNode::new(w1, node.counts()));
    for bit in [0u8, 1] {
        if let Some(c) = tree.child_index(src, bit) {
            let child = build(tree, c, d + 1, depth, out);
            out[me].children[bit as usize] = child;
        }
    }
    me as u32
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Probability that the next bit is 1 under `model`.
pub fn frozen_predict(model: &FrozenModel, context: &[u8]) -> f64 {
    model.predict(context)
}

/// `-log2` probability of `x` under `model`, with `preceding_context`
/// (up to `depth` bits) placed before it.
pub fn typical_codelength_frozen(model: &FrozenModel, x: &[u8], preceding_context: &[u8]) -> f64 {
    model.symbol_costs_after(x, preceding_context).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alternating(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i % 2) as u8).collect()
    }

    fn iid(n: usize, p: f64, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_bool(p) as u8).collect()
    }

    #[test]
    fn rejects_bad_training() {
        assert_eq!(train(&[], 2), Err(Error::EmptyTraining));
        assert_eq!(train(&[&[0, 1]], 2), Err(Error::TrainingTooShort { depth: 2 }));
        assert!(matches!(train(&[&[0; 100]], 64), Err(Error::DepthTooLarge { .. })));
    }

    #[test]
    fn prefix_is_context_only() {
        let m = train(&[&[1, 0, 1]], 2).unwrap();
        assert_eq!(m.root_counts().total(), 1);
        let m = train(&[&[1, 0, 1], &[0, 0, 0, 1]], 2).unwrap();
        assert_eq!(m.root_counts(), KtCounts::new(1, 2));
    }

    #[test]
    fn leaves_have_unit_weight_and_weights_are_probabilities() {
        let x = iid(3000, 0.3, 1);
        let m = train(&[&x], 3).unwrap();
        fn walk(m: &FrozenModel, idx: usize, d: usize) {
            let n = &m.nodes[idx];
            assert!((0.0..=1.0).contains(&n.w1));
            if d == m.depth {
                assert_eq!(n.w1, 1.0);
            }
            for c in n.children {
                if c != NONE {
                    walk(m, c as usize, d + 1);
                }
            }
        }
        walk(&m, 0, 0);
    }

    #[test]
    fn depth_zero_is_frozen_kt() {
        let m = train(&[&[1, 1, 0, 1, 1]], 0).unwrap();
        for ctx in [&[][..], &[0, 0, 0], &[1]] {
            assert!((m.predict(ctx) - 4.5 / 6.0).abs() < 1e-15);
        }
        let balanced = train(&[&[0, 1, 1, 0]], 0).unwrap();
        let x = iid(77, 0.9, 4);
        assert!((typical_codelength_frozen(&balanced, &x, &[]) - 77.0).abs() < 1e-9);
    }

    #[test]
    fn unseen_context_falls_back_to_half() {
        // Only context "0" (most recent bit 0) is ever seen at depth 1.
        let m = train(&[&[0, 0, 0, 0, 0, 0, 0, 0]], 1).unwrap();
        let node = &m.nodes[0];
        assert_eq!(node.children[1], NONE);
        let want = node.w1 * node.q1 + (1.0 - node.w1) * 0.5;
        assert_eq!(m.predict(&[1]), want);
    }

    #[test]
    fn alternating_training() {
        let x = alternating(1000);
        let m = train(&[&x], 2).unwrap();
        assert!(m.predict(&[0, 1]) < 0.1);
        assert!(m.predict(&[1, 0]) > 0.9);
        assert!(m.root_weight() < 1e-6);
        let alt = alternating(100);
        let flat = vec![1u8; 100];
        assert!(typical_codelength_frozen(&m, &alt, &[]) + 50.0 < typical_codelength_frozen(&m, &flat, &[]));
    }

    #[test]
    fn iid_training_favours_memoryless() {
        let short = train(&[&iid(100, 0.5, 9)], 4).unwrap();
        let long = train(&[&iid(10_000, 0.5, 9)], 4).unwrap();
        assert!(long.root_weight() > 0.9, "{}", long.root_weight());
        assert!(long.root_weight() >= short.root_weight());
    }

    #[test]
    fn predictions_do_not_mutate() {
        let m = train(&[&iid(5000, 0.2, 3)], 6).unwrap();
        let before = m.state_digest();
        let snapshot = m.clone();
        let x = iid(2000, 0.6, 8);
        for i in 0..x.len() {
            let p = frozen_predict(&m, &x[i.saturating_sub(6)..i]);
            assert!(p > 0.0 && p < 1.0);
        }
        let _ = typical_codelength_frozen(&m, &x, &[1, 0]);
        assert_eq!(m.state_digest(), before);
        assert_eq!(m, snapshot);
    }

    #[test]
    fn windowed_costs_match_cumulative_pass() {
        let m = train(&[&iid(4000, 0.35, 12)], 5).unwrap();
        let x = iid(600, 0.5, 13);
        let costs = m.symbol_costs(&x);
        let mut prefix = vec![0.0];
        for c in &costs {
            prefix.push(prefix.last().unwrap() + c);
        }
        for (n, l) in [(0usize, 50usize), (3, 10), (17, 300), (599, 1), (250, 350)] {
            let ctx_start = n.saturating_sub(5);
            let windowed = typical_codelength_frozen(&m, &x[n..n + l], &x[ctx_start..n]);
            assert!((windowed - (prefix[n + l] - prefix[n])).abs() < 1e-9);
        }
        let (a, b) = x.split_at(211);
        let split = typical_codelength_frozen(&m, a, &[]) + typical_codelength_frozen(&m, b, &a[a.len() - 5..]);
        assert!((split - typical_codelength_frozen(&m, &x, &[])).abs() < 1e-9);
        assert_eq!(typical_codelength_frozen(&m, &[], &[1]), 0.0);
    }

    #[test]
    fn persistence_round_trips() {
        let m = train(&[&iid(3000, 0.3, 21), &alternating(500)], 7).unwrap();
        let bytes = m.to_bytes();
        let back = FrozenModel::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(&bytes[..8], MAGIC);
    }

    #[test]
    fn persistence_rejects_damage() {
        let m = train(&[&iid(300, 0.3, 2)], 3).unwrap();
        let bytes = m.to_bytes();
        assert!(FrozenModel::read_from(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(FrozenModel::read_from(bad.as_slice()).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(FrozenModel::read_from(extra.as_slice()).is_err());
        let mut version = bytes;
        version[8] = 9;
        assert!(FrozenModel::read_from(version.as_slice()).is_err());
    }
}
