//! Reference log-domain context tree.

use crate::codelength::KtCounts;
use std::f64::consts::LN_2;

pub(crate) const NONE: u32 = u32::MAX;

/// `ln(e^a + e^b)`.
#[inline]
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// One context node. `counts` covers every symbol routed through the node;
/// `terminal` holds the symbols whose available context ended exactly here
/// (only possible near the start of a sequence).
#[derive(Debug, Clone)]
pub struct ContextNode {
    counts: KtCounts,
    terminal: KtCounts,
    ln_pe: f64,
    ln_pt: f64,
    ln_pw: f64,
    children: [u32; 2],
}

impl ContextNode {
    fn empty() -> Self {
        Self {
            counts: KtCounts::default(),
            terminal: KtCounts::default(),
            ln_pe: 0.0,
            ln_pt: 0.0,
            ln_pw: 0.0,
            children: [NONE; 2],
        }
    }

    pub fn counts(&self) -> KtCounts {
        self.counts
    }

    pub fn terminal_counts(&self) -> KtCounts {
        self.terminal
    }

    /// `ln P_e` of all symbols seen in this context.
    pub fn ln_pe(&self) -> f64 {
        self.ln_pe
    }

    /// `ln P_e` of the terminal symbols.
    pub fn ln_pt(&self) -> f64 {
        self.ln_pt
    }

    /// `ln P_w`, the weighted probability of this subtree.
    pub fn ln_pw(&self) -> f64 {
        self.ln_pw
    }

    pub(crate) fn child_index(&self, bit: u8) -> Option<usize> {
        let c = self.children[bit as usize];
        (c != NONE).then_some(c as usize)
    }
}

/// Binary context tree of bounded depth with KT estimators at every node and
/// CTW weighting `P_w(s) = 1/2 P_e(s) + 1/2 P_w(0s) P_w(1s)`.
///
/// Nodes are created lazily; an absent child stands for an empty subtree
/// with `P_w = 1`. A symbol whose available context is shorter than the
/// depth stops at the node its context reaches. There the deeper-model
/// branch codes it with a separate KT estimator, so that node weights
/// `1/2 P_e(s) + 1/2 P_e(terminal) P_w(0s) P_w(1s)`. With full contexts the
/// terminal part is empty and the plain recursion holds.
#[derive(Debug, Clone)]
pub struct ContextTree {
    max_depth: usize,
    nodes: Vec<ContextNode>,
    path: Vec<u32>,
}

impl ContextTree {
    pub fn new(max_depth: usize) -> Self {
        Self { max_depth, nodes: vec![ContextNode::empty()], path: Vec::with_capacity(max_depth + 1) }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn root(&self) -> &ContextNode {
        &self.nodes[0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, index: usize) -> &ContextNode {
        &self.nodes[index]
    }

    pub fn child(&self, index: usize, bit: u8) -> Option<&ContextNode> {
        self.nodes[index].child_index(bit).map(|c| &self.nodes[c])
    }

    pub(crate) fn child_index(&self, index: usize, bit: u8) -> Option<usize> {
        self.nodes[index].child_index(bit)
    }

    /// `-log2 P_w` at the root: the code length of everything seen so far.
    pub fn codelength(&self) -> f64 {
        -self.nodes[0].ln_pw / LN_2
    }

    /// Visits every node with its depth, in creation order.
    pub fn walk(&self) -> impl Iterator<Item = (usize, usize, &ContextNode)> + '_ {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for &c in &n.children {
                if c != NONE {
                    depth[c as usize] = depth[i] + 1;
                }
            }
        }
        self.nodes.iter().enumerate().map(move |(i, n)| (i, depth[i], n))
    }

    /// Processes `symbol` given its preceding bits (`context`, oldest first;
    /// only the last `max_depth` are used). Returns the predictive
    /// probability the tree assigned to `symbol`.
    pub fn update(&mut self, context: &[u8], symbol: u8) -> f64 {
        let before = self.nodes[0].ln_pw;
        let reach = context.len().min(self.max_depth);
        self.path.clear();
        let mut idx = 0u32;
        self.path.push(0);
        for d in 0..reach {
            let bit = context[context.len() - 1 - d] as usize;
            let next = self.nodes[idx as usize].children[bit];
            idx = if next == NONE {
                let fresh = self.nodes.len() as u32;
                self.nodes.push(ContextNode::empty());
                self.nodes[idx as usize].children[bit] = fresh;
                fresh
            } else {
                next
            };
            self.path.push(idx);
        }
        let terminal = reach < self.max_depth;
        for (depth, &i) in self.path.iter().enumerate().rev() {
            let i = i as usize;
            let node = &mut self.nodes[i];
            node.ln_pe += node.counts.predict(symbol).ln();
            node.counts.record(symbol);
            if depth == reach && terminal {
                node.ln_pt += node.terminal.predict(symbol).ln();
                node.terminal.record(symbol);
            }
            if depth == self.max_depth {
                self.nodes[i].ln_pw = self.nodes[i].ln_pe;
            } else {
                let mut deeper = self.nodes[i].ln_pt;
                for c in self.nodes[i].children {
                    if c != NONE {
                        deeper += self.nodes[c as usize].ln_pw;
                    }
                }
                let node = &mut self.nodes[i];
                node.ln_pw = ln_add_exp(node.ln_pe, deeper) - LN_2;
            }
        }
        (self.nodes[0].ln_pw - before).exp()
    }

    /// Feeds a whole sequence; `initial_context` precedes `x`.
    pub fn extend(&mut self, x: &[u8], initial_context: &[u8]) {
        let mut history = Vec::with_capacity(initial_context.len() + x.len());
        history.extend_from_slice(initial_context);
        for &bit in x {
            let start = history.len().saturating_sub(self.max_depth);
            self.update(&history[start..], bit);
            history.push(bit);
        }
    }
}
