//! Binary context-tree weighting used as the self-describing coder.

mod block;
mod tree;
mod window;

pub use block::BlockCoder;
pub use tree::{ContextNode, ContextTree};
pub use window::SequentialCoder;

use crate::codelength::log_star_unchecked;
use crate::error::{Error, Result};

/// Incremental coder of a growing window that reports the CTW code length
/// for every tree depth `0..=max_depth` after each symbol. The window starts
/// cold: its first symbols are coded with whatever context is available.
pub trait WindowCoder {
    fn max_depth(&self) -> usize;

    /// Number of symbols in the current window.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Starts a new, empty window. Allocations are kept.
    fn reset(&mut self);

    /// Appends one symbol to the window.
    fn push(&mut self, bit: u8);

    /// CTW code length in bits of the window for one depth.
    fn codelength(&self, depth: usize) -> f64;

    /// `min over D of (codelength(D) + log* D)` with the minimising depth.
    fn best(&self) -> (f64, usize);
}

/// Updates `tree` with `symbol` and returns its predictive probability.
pub fn ctw_update(tree: &mut ContextTree, context: &[u8], symbol: u8) -> f64 {
    tree.update(context, symbol)
}

/// CTW code length of `x` in bits for a tree of depth `depth`.
/// `initial_context` supplies bits preceding `x`; pass `&[]` to start cold.
pub fn ctw_codelength(x: &[u8], depth: usize, initial_context: &[u8]) -> f64 {
    let mut tree = ContextTree::new(depth);
    tree.extend(x, initial_context);
    tree.codelength()
}

/// Code length of a sequence under the atypical coder, split into parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtypicalCodeLength {
    pub total_bits: f64,
    pub best_depth: usize,
    /// `log* D` for the chosen depth.
    pub depth_penalty: f64,
    /// `log* l` for the sequence length.
    pub length_penalty: f64,
}

impl AtypicalCodeLength {
    /// The CTW part alone, without either header term.
    pub fn tree_bits(&self) -> f64 {
        self.total_bits - self.depth_penalty - self.length_penalty
    }
}

/// `min over D <= max_depth of (CTW length + log* D) + log* l`.
pub fn atypical_codelength(x: &[u8], max_depth: usize) -> Result<AtypicalCodeLength> {
    if x.is_empty() {
        return Err(Error::LengthTooSmall { min: 1, got: 0 });
    }
    let mut best = (f64::INFINITY, 0, 0.0);
    for depth in 0..=max_depth {
        let penalty = log_star_unchecked(depth as u64);
        let bits = ctw_codelength(x, depth, &[]) + penalty;
        if bits < best.0 {
            best = (bits, depth, penalty);
        }
    }
    let length_penalty = log_star_unchecked(x.len() as u64);
    Ok(AtypicalCodeLength {
        total_bits: best.0 + length_penalty,
        best_depth: best.1,
        depth_penalty: best.2,
        length_penalty,
    })
}


#[cfg(test)]
pub(crate) use tree::tests::assert_recursion;

#[cfg(test)]
fn tree_check(tree: &ContextTree) {
    assert_recursion(tree, 1e-9);
}
