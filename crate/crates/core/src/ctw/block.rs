//! Multi-depth window coder in block form.
//!
//! For every node and tree depth `D` it stores `R = P_w / P_e`, which obeys
//! `R(s) = 1/2 + 1/2 G(s) R(0s) R(1s)` with `G(s) = P_t(s) P_e(0s) P_e(1s) / P_e(s)`
//! depending on counts only. Each node keeps `P_e` and `1 / P_e` up to date
//! through small reciprocal tables, so an update needs no division and no
//! logarithm, and comparing depths needs a single logarithm at the end. All values stay in the normal `f64` range
//! for windows up to [`BlockCoder::MAX_WINDOW`] symbols.

use super::WindowCoder;
use crate::codelength::log_star_unchecked;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    counts: [u32; 2],
    children: [u32; 2],
    /// `P_e` of the counts and its reciprocal.
    pe: f64,
    inv_pe: f64,
    /// First of the `max_depth - depth` ratio slots, for tree depths
    /// `depth + 1 ..= max_depth`.
    slots: u32,
    /// Window position of an event whose context continues below this
    /// node without branching. Those deeper nodes are not materialised:
    /// they would all hold this node's counts and `R = 1`.
    tail: u32,
    terminal: bool,
}

/// Small reciprocal tables for updating KT block probabilities in place.
#[derive(Debug, Clone, Default)]
struct Reciprocals {
    /// `1 / (n + 1)`
    total: Vec<f64>,
    /// `1 / (k + 1/2)`
    count: Vec<f64>,
}

impl Reciprocals {
    fn grow_to(&mut self, n: usize) {
        while self.total.len() <= n {
            let k = self.total.len() as f64;
            self.total.push(1.0 / (k + 1.0));
            self.count.push(1.0 / (k + 0.5));
        }
    }
}

/// Window coder for windows of at most [`BlockCoder::MAX_WINDOW`] symbols.
#[derive(Debug, Clone)]
pub struct BlockCoder {
    max_depth: usize,
    nodes: Vec<Node>,
    ratio: Vec<f64>,
    history: Vec<u8>,
    path: Vec<u32>,
    recip: Reciprocals,
    /// `2^-log* D`, so that the best depth maximises `R_D * prior[D]`.
    prior: Vec<f64>,
    depth_cost: Vec<f64>,
}

impl BlockCoder {
    /// Longest window for which every stored value is a normal `f64`.
    pub const MAX_WINDOW: usize = 1000;

    pub fn new(max_depth: usize) -> Self {
        let depth_cost: Vec<f64> = (0..=max_depth as u64).map(log_star_unchecked).collect();
        let mut coder = Self {
            max_depth,
            nodes: Vec::new(),
            ratio: Vec::new(),
            history: Vec::new(),
            path: Vec::with_capacity(max_depth + 1),
            recip: Reciprocals::default(),
            prior: depth_cost.iter().map(|c| (-c).exp2()).collect(),
            depth_cost,
        };
        coder.reset();
        coder
    }

    fn new_node(&mut self, depth: usize, like: Option<Node>, tail: u32) -> u32 {
        let (counts, pe, inv_pe) = like.map_or(([0, 0], 1.0, 1.0), |n| (n.counts, n.pe, n.inv_pe));
        let slots = self.ratio.len() as u32;
        self.ratio.resize(self.ratio.len() + (self.max_depth - depth), 1.0);
        let tail = if depth < self.max_depth { tail } else { NONE };
        self.nodes.push(Node { counts, children: [NONE; 2], pe, inv_pe, slots, tail, terminal: false });
        (self.nodes.len() - 1) as u32
    }

    fn attach(&mut self, parent: u32, bit: u8, child: u32) {
        self.nodes[parent as usize].children[bit as usize] = child;
    }

    /// Walks (and grows) the context path of the symbol at window position
    /// `i`, leaving it in `self.path`.
    fn walk(&mut self, i: usize) {
        let reach = i.min(self.max_depth);
        // Only symbols with a full context continue below a fresh node
        // implicitly; the first few keep their explicit terminal node.
        let full = reach == self.max_depth;
        let here = i as u32;
        self.path.clear();
        self.path.push(0);
        let mut idx = 0u32;
        let mut d = 0;
        while d < reach {
            let node = self.nodes[idx as usize];
            if node.tail != NONE {
                let p = node.tail as usize;
                let mut q = d;
                while q < reach && self.history[i - 1 - q] == self.history[p - 1 - q] {
                    q += 1;
                }
                if q == reach {
                    // same context all the way down
                    return;
                }
                self.nodes[idx as usize].tail = NONE;
                for level in d..q {
                    let child = self.new_node(level + 1, Some(node), NONE);
                    self.attach(idx, self.history[p - 1 - level], child);
                    self.path.push(child);
                    idx = child;
                }
                let old = self.new_node(q + 1, Some(node), node.tail);
                self.attach(idx, self.history[p - 1 - q], old);
                let fresh = self.new_node(q + 1, None, here);
                self.attach(idx, self.history[i - 1 - q], fresh);
                self.path.push(fresh);
                return;
            }
            let c = self.history[i - 1 - d];
            let next = node.children[c as usize];
            idx = if next == NONE {
                let fresh = self.new_node(d + 1, None, if full { here } else { NONE });
                self.attach(idx, c, fresh);
                if full {
                    self.path.push(fresh);
                    return;
                }
                fresh
            } else {
                next
            };
            self.path.push(idx);
            d += 1;
        }
    }

    #[inline]
    fn root_ratio(&self, depth: usize) -> f64 {
        if depth == 0 {
            1.0
        } else {
            self.ratio[depth - 1]
        }
    }

    fn root_pe(&self) -> f64 {
        self.nodes[0].pe
    }
}

impl WindowCoder for BlockCoder {
    fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn len(&self) -> usize {
        self.history.len()
    }

    fn reset(&mut self) {
        self.nodes.clear();
        self.ratio.clear();
        self.history.clear();
        self.new_node(0, None, NONE);
    }

    /// # Panics
    /// When the window would exceed [`BlockCoder::MAX_WINDOW`].
    fn push(&mut self, bit: u8) {
        let bit = bit as usize & 1;
        let i = self.history.len();
        assert!(i < Self::MAX_WINDOW, "window longer than {}", Self::MAX_WINDOW);
        self.recip.grow_to(i + 1);
        let reach = i.min(self.max_depth);

        self.walk(i);
        for &n in &self.path {
            let node = &mut self.nodes[n as usize];
            let k = node.counts[bit] as usize;
            let total = (node.counts[0] + node.counts[1]) as usize;
            node.pe *= (k as f64 + 0.5) * self.recip.total[total];
            node.inv_pe *= (total as f64 + 1.0) * self.recip.count[k];
            node.counts[bit] += 1;
        }
        let bottom = self.path.len() - 1;
        if reach < self.max_depth {
            self.nodes[self.path[bottom] as usize].terminal = true;
        }

        // Nodes whose only events all went to the same child, down to the
        // bottom of the path, have R = 1 in every tree and stay that way.
        let mut chain = bottom;
        while chain > 0 {
            let parent = self.nodes[self.path[chain - 1] as usize];
            if parent.terminal || parent.counts != self.nodes[self.path[chain] as usize].counts {
                break;
            }
            chain -= 1;
        }

        for d in (0..chain).rev() {
            let s = self.nodes[self.path[d] as usize];
            let c = self.nodes[self.path[d + 1] as usize];
            let side = self.history[i - 1 - d] as usize ^ 1;
            let t = match s.children[side] {
                NONE => None,
                t => Some(self.nodes[t as usize]),
            };
            let t_pe = t.map_or(1.0, |t| t.pe);
            let pt = if s.terminal { 0.5 } else { 1.0 };
            let g = c.pe * s.inv_pe * t_pe * pt;

            let lanes = self.max_depth - d;
            let base = s.slots as usize;
            // Children are created after their parent, so their slots come
            // after this node's.
            let (head, later) = self.ratio.split_at_mut(base + lanes);
            let own = &mut head[base..];
            // tree depth d + 1: both children are leaves with R = 1
            own[0] = 0.5 + 0.5 * g;
            let offset = base + lanes;
            let rc = &later[c.slots as usize - offset..][..lanes - 1];
            match t {
                None => mix_one(&mut own[1..], rc, g),
                Some(t) => mix_two(&mut own[1..], rc, &later[t.slots as usize - offset..][..lanes - 1], g),
            }
        }
        self.history.push(bit as u8);
    }

    fn codelength(&self, depth: usize) -> f64 {
        -self.root_pe().log2() - self.root_ratio(depth).log2()
    }

    fn best(&self) -> (f64, usize) {
        let mut best = (0usize, 1.0);
        for d in 1..=self.max_depth {
            let v = self.root_ratio(d) * self.prior[d];
            if v > best.1 {
                best = (d, v);
            }
        }
        let d = best.0;
        (self.codelength(d) + self.depth_cost[d], d)
    }
}

/// `own[j] = 1/2 + 1/2 g rc[j]`
#[inline]
fn mix_one(own: &mut [f64], rc: &[f64], g: f64) {
    let n = own.len().min(rc.len());
    let (own, rc) = (&mut own[..n], &rc[..n]);
    let half_g = 0.5 * g;
    for j in 0..n {
        own[j] = 0.5 + half_g * rc[j];
    }
}

/// `own[j] = 1/2 + 1/2 g rc[j] rt[j]`
#[inline]
fn mix_two(own: &mut [f64], rc: &[f64], rt: &[f64], g: f64) {
    let n = own.len().min(rc.len()).min(rt.len());
    let (own, rc, rt) = (&mut own[..n], &rc[..n], &rt[..n]);
    let half_g = 0.5 * g;
    for j in 0..n {
        own[j] = 0.5 + half_g * rc[j] * rt[j];
    }
}
