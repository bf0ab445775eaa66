//! Sliding detector: scores every start position by the best code-length
//! gain of any window starting there, and reports the flagged windows.

use crate::codelength::log_star_unchecked;
use crate::ctw::{BlockCoder, SequentialCoder, WindowCoder};
use crate::error::{Error, Result};
use crate::frozen::FrozenModel;
use crate::iid::IidTypicalModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Model of typical data, queried for per-symbol costs.
pub trait TypicalCoder: Sync {
    /// Number of preceding bits used as context.
    fn context_depth(&self) -> usize;

    /// Cost in bits of every symbol of `x`, each coded with the bits of `x`
    /// before it as context.
    fn symbol_costs(&self, x: &[u8]) -> Vec<f64>;

    /// Short human-readable description for export headers.
    fn describe(&self) -> String;
}

impl TypicalCoder for IidTypicalModel {
    fn context_depth(&self) -> usize {
        0
    }

    fn symbol_costs(&self, x: &[u8]) -> Vec<f64> {
        let (zero, one) = (self.symbol_cost(0), self.symbol_cost(1));
        x.iter().map(|&b| if b == 0 { zero } else { one }).collect()
    }

    fn describe(&self) -> String {
        format!("iid(p={})", self.p())
    }
}

impl TypicalCoder for FrozenModel {
    fn context_depth(&self) -> usize {
        self.depth()
    }

    fn symbol_costs(&self, x: &[u8]) -> Vec<f64> {
        FrozenModel::symbol_costs(self, x)
    }

    fn describe(&self) -> String {
        format!("frozen(depth={}, nodes={})", self.depth(), self.node_count())
    }
}

/// Window lengths and coder depth for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub l_min: usize,
    pub l_max: usize,
    pub max_depth: usize,
    /// Flagging threshold in bits; `None` only ranks.
    pub tau: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { l_min: 16, l_max: 512, max_depth: 16, tau: None }
    }
}

impl ScanConfig {
    pub fn new(l_min: usize, l_max: usize, max_depth: usize, tau: Option<f64>) -> Result<Self> {
        let cfg = Self { l_min, l_max, max_depth, tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(Error::InvalidConfig(format!("need 1 <= l_min <= l_max, got {}..{}", self.l_min, self.l_max)));
        }
        if self.max_depth > 63 {
            return Err(Error::InvalidConfig(format!("max depth {} exceeds 63", self.max_depth)));
        }
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::InvalidTau(tau));
            }
        }
        Ok(())
    }
}

/// Best window found for one start position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// `L_A - L_T` in bits; negative when the window compresses.
    pub score: f64,
    pub length: usize,
    pub depth: usize,
}

/// Per-position scores of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanProfile {
    pub config: ScanConfig,
    pub typical: String,
    pub input_len: usize,
    /// One entry per start position `0..=input_len - l_min`.
    pub witnesses: Vec<Witness>,
}

impl ScanProfile {
    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.witnesses.iter().map(|w| w.score)
    }

    /// Position with the smallest score (earliest on ties).
    pub fn argmin(&self) -> Option<(usize, Witness)> {
        let mut best: Option<(usize, Witness)> = None;
        for (n, w) in self.witnesses.iter().enumerate() {
            if best.is_none_or(|(_, b)| w.score < b.score) {
                best = Some((n, *w));
            }
        }
        best
    }

    /// Writes `n,delta_l,best_l,best_d` rows after a config comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header_comment())?;
        writeln!(out, "n,delta_l,best_l,best_d")?;
        for (n, w) in self.witnesses.iter().enumerate() {
            writeln!(out, "{n},{},{},{}", w.score, w.length, w.depth)?;
        }
        Ok(())
    }

    pub(crate) fn header_comment(&self) -> String {
        let tau = self.config.tau.map_or("none".to_string(), |t| t.to_string());
        format!(
            "# l_min={} l_max={} max_depth={} tau={} typical={} input_len={}",
            self.config.l_min, self.config.l_max, self.config.max_depth, tau, self.typical, self.input_len
        )
    }
}

/// Scores every start position of `x` against `typical`.
///
/// For start `n` the score is the minimum over window lengths `l` of
/// `L_A(x[n..n+l]) - L_T(x[n..n+l])`, where `L_A` is the CTW length
/// minimised over depth plus its header terms and `L_T` codes the window
/// with the bits before it as context. Runs on the current rayon pool;
/// results do not depend on the number of threads.
pub fn scan<T: TypicalCoder>(x: &[u8], typical: &T, cfg: &ScanConfig) -> Result<ScanProfile> {
    let mut profiles = scan_against(x, &[typical as &dyn TypicalCoder], cfg)?;
    Ok(profiles.pop().expect("one profile per typical model"))
}

/// As [`scan`] for several typical models at once, sharing the atypical
/// coding of every window. Returns one profile per model, in order.
pub fn scan_against(x: &[u8], typicals: &[&dyn TypicalCoder], cfg: &ScanConfig) -> Result<Vec<ScanProfile>> {
    cfg.validate()?;
    let depth = typicals.iter().map(|t| t.context_depth()).max().unwrap_or(0);
    let min = cfg.l_min + depth + 1;
    if x.len() < min {
        return Err(Error::InputTooShort { got: x.len(), min });
    }
    let prefixes: Vec<Vec<f64>> = typicals.iter().map(|t| prefix_sums(&t.symbol_costs(x))).collect();
    let length_cost: Vec<f64> = (0..=cfg.l_max as u64).map(log_star_unchecked).collect();
    let starts = x.len() - cfg.l_min + 1;
    let job = Job { x, cfg, prefixes: &prefixes, length_cost: &length_cost };
    let per_start = if cfg.l_max <= BlockCoder::MAX_WINDOW {
        job.score_all(starts, || BlockCoder::new(cfg.max_depth))
    } else {
        job.score_all(starts, || SequentialCoder::new(cfg.max_depth))
    };
    let k = typicals.len();
    Ok(typicals
        .iter()
        .enumerate()
        .map(|(t, typical)| ScanProfile {
            config: *cfg,
            typical: typical.describe(),
            input_len: x.len(),
            witnesses: per_start.iter().skip(t).step_by(k).copied().collect(),
        })
        .collect())
}

fn prefix_sums(costs: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(costs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for c in costs {
        acc += c;
        prefix.push(acc);
    }
    prefix
}

struct Job<'a> {
    x: &'a [u8],
    cfg: &'a ScanConfig,
    prefixes: &'a [Vec<f64>],
    length_cost: &'a [f64],
}

impl Job<'_> {
    /// Witnesses of all starts, interleaved by typical model.
    fn score_all<C: WindowCoder>(&self, starts: usize, make: impl Fn() -> C + Sync + Send) -> Vec<Witness> {
        (0..starts)
            .into_par_iter()
            .map_init(&make, |coder, n| self.best_windows(coder, n))
            .flatten_iter()
            .collect()
    }

    fn best_windows<C: WindowCoder>(&self, coder: &mut C, n: usize) -> Vec<Witness> {
        let cfg = self.cfg;
        coder.reset();
        let end = (n + cfg.l_max).min(self.x.len());
        let mut best = vec![Witness { score: f64::INFINITY, length: 0, depth: 0 }; self.prefixes.len()];
        for (k, &bit) in self.x[n..end].iter().enumerate() {
            coder.push(bit);
            let l = k + 1;
            if l < cfg.l_min {
                continue;
            }
            let (tree_bits, depth) = coder.best();
            let atypical = tree_bits + self.length_cost[l];
            for (b, prefix) in best.iter_mut().zip(self.prefixes) {
                let score = atypical - (prefix[n + l] - prefix[n]);
                if score < b.score {
                    *b = Witness { score, length: l, depth };
                }
            }
        }
        best
    }
}

/// A reported atypical window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedSegment {
    pub start: usize,
    pub length: usize,
    pub score: f64,
    pub depth: usize,
    /// Union of the overlapping flagged windows this one stands for.
    pub span_start: usize,
    pub span_end: usize,
}

/// Windows with score below `-tau`, overlapping ones merged into the best of
/// them, sorted by score (most atypical first).
pub fn flag_segments(profile: &ScanProfile, tau: f64) -> Vec<FlaggedSegment> {
    let mut out: Vec<FlaggedSegment> = Vec::new();
    for (n, w) in profile.witnesses.iter().enumerate() {
        if !(w.score < -tau) {
            continue;
        }
        let seg = FlaggedSegment { start: n, length: w.length, score: w.score, depth: w.depth, span_start: n, span_end: n + w.length };
        match out.last_mut() {
            Some(last) if n < last.span_end => {
                let span_end = last.span_end.max(seg.span_end);
                if seg.score < last.score {
                    *last = FlaggedSegment { span_start: last.span_start, ..seg };
                }
                last.span_end = span_end;
            }
            _ => out.push(seg),
        }
    }
    out.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.start.cmp(&b.start)));
    out
}

/// Writes flagged segments as CSV after the profile's config comment.
pub fn write_flags_csv<W: Write>(profile: &ScanProfile, flags: &[FlaggedSegment], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", profile.header_comment())?;
    writeln!(out, "start,length,score,depth,span_start,span_end")?;
    for f in flags {
        writeln!(out, "{},{},{},{},{},{}", f.start, f.length, f.score, f.depth, f.span_start, f.span_end)?;
    }
    Ok(())
}

/// `S[0] = 0`, `S[k] = S[k-1] + 1` for a 1 and `- 1` for a 0.
pub fn random_walk(x: &[u8]) -> Vec<i64> {
    let mut walk = Vec::with_capacity(x.len() + 1);
    let mut s = 0i64;
    walk.push(s);
    for &b in x {
        s += if b != 0 { 1 } else { -1 };
        walk.push(s);
    }
    walk
}
