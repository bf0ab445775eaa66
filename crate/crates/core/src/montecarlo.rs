//! Seeded Monte-Carlo experiments on the detector.
//!
//! Every trial draws from its own ChaCha8 stream derived from the master
//! seed, an experiment stream id and the trial index, so estimates are
//! bit-identical whatever the number of worker threads.

use std::f64::consts::LN_2;
use std::io::{self, Write};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSequence;
use crate::codelength::log_star_unchecked;
use crate::ctw::{BlockCoder, ContextTree, SequentialCoder, WindowCoder};
use crate::error::{Error, Result};
use crate::frozen::{train, FrozenModel};
use crate::iid::{miss_upper_bound, pa_upper_bound};
use crate::scanner::{scan_against, ScanConfig, ScanProfile, TypicalCoder};

/// Normal quantile used for every confidence half-width (two-sided 99%).
pub const Z_CONFIDENCE: f64 = 2.58;

const STREAM_PA: u64 = 1 << 40;
const STREAM_MISS: u64 = 2 << 40;
const STREAM_PHASE: u64 = 3 << 40;
const STREAM_TRAIN: u64 = 4 << 40;
const STREAM_TEST: u64 = 5 << 40;
const STREAM_CTW: u64 = 6 << 40;

/// Generator of trial `index` in experiment stream `stream`.
pub fn trial_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // 2^32 words per trial
    rng.set_word_pos(u128::from(index) << 32);
    rng
}

/// `z * sqrt(p (1 - p) / n)` for an estimated proportion `p` over `n` trials.
pub fn half_width(estimate: f64, trials: u64) -> f64 {
    Z_CONFIDENCE * (estimate * (1.0 - estimate) / trials as f64).sqrt()
}

/// Parameters of the bound simulations on binary iid data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    /// Typical probability of a 1.
    pub p: f64,
    /// Probability of a 1 in the alternative; used by the miss simulation.
    pub p_a: f64,
    pub tau: f64,
    /// Window lengths, strictly increasing.
    pub lengths: Vec<usize>,
    /// Weight of `ln l` in the threshold; 3 gives the usual criterion.
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            p: 0.5,
            p_a: 0.3,
            tau: 1.0,
            lengths: vec![64, 128, 256, 512, 1024],
            alpha: 3.0,
            trials: 100_000,
            seed: 1,
        }
    }
}

fn check_probability(v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { value: v, range: "(0, 1)" })
    }
}

fn check_lengths(lengths: &[usize]) -> Result<()> {
    if lengths.is_empty() {
        return Err(Error::InvalidGrid("no lengths".into()));
    }
    if lengths[0] == 0 || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(format!("lengths must be positive and increasing: {lengths:?}")));
    }
    Ok(())
}

impl BoundSpec {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        check_probability(self.p_a)?;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidTau(self.tau));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidGrid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidGrid("need at least one trial".into()));
        }
        check_lengths(&self.lengths)
    }

    /// Largest deviation `|k - l p|` of the count of ones that is not
    /// flagged: `sqrt(l p q (2 tau ln 2 + alpha ln l))`.
    pub fn count_threshold(&self, l: usize) -> f64 {
        let lf = l as f64;
        (lf * self.p * (1.0 - self.p) * (2.0 * self.tau * LN_2 + self.alpha * lf.ln())).sqrt()
    }

    fn flags(&self, l: usize, ones: u64, threshold: f64) -> bool {
        (ones as f64 - l as f64 * self.p).abs() > threshold
    }
}

/// One estimated probability on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Length `l` or exponent `alpha`, depending on the experiment.
    pub x: f64,
    pub estimate: f64,
    pub half_width: f64,
    /// Theoretical bound at this point, when one applies.
    pub bound: Option<f64>,
    pub hits: u64,
    pub trials: u64,
}

impl GridPoint {
    fn from_hits(x: f64, hits: u64, trials: u64, bound: Option<f64>) -> Self {
        let estimate = hits as f64 / trials as f64;
        Self { x, estimate, half_width: half_width(estimate, trials), bound, hits, trials }
    }

    /// `estimate <= bound + half_width`; `true` without a bound.
    pub fn within_bound(&self) -> bool {
        self.bound.is_none_or(|b| self.estimate <= b + self.half_width)
    }
}

/// Writes `label,estimate,half_width,bound` rows after a comment line.
pub fn write_grid_csv<W: Write>(mut out: W, comment: &str, label: &str, points: &[GridPoint]) -> io::Result<()> {
    writeln!(out, "# {comment}")?;
    writeln!(out, "{label},estimate,half_width,bound")?;
    for pt in points {
        let bound = pt.bound.map_or(String::new(), |b| b.to_string());
        writeln!(out, "{},{},{},{bound}", pt.x, pt.estimate, pt.half_width)?;
    }
    Ok(())
}

/// Counts, over `trials` binomial draws of `Bin(l, p)`, how many satisfy
/// `hit`. The count of ones is a sufficient statistic for every criterion
/// used here, so one draw stands in for a whole sequence.
fn count_hits(seed: u64, stream: u64, trials: u64, l: usize, p: f64, hit: impl Fn(u64) -> bool + Sync) -> u64 {
    let dist = Binomial::new(l as u64, p).expect("validated probability");
    (0..trials)
        .into_par_iter()
        .filter(|&t| hit(dist.sample(&mut trial_rng(seed, stream, t))))
        .count() as u64
}

/// Frequency with which iid(`p`) sequences of each length are flagged by
/// `|k - l p| > count_threshold(l)`. The bound column is `pa_upper_bound`
/// when `alpha = 3`.
pub fn simulate_pa(spec: &BoundSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    spec.lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let threshold = spec.count_threshold(l);
            let hits = count_hits(spec.seed, STREAM_PA + i as u64, spec.trials, l, spec.p, |k| spec.flags(l, k, threshold));
            let bound = if spec.alpha == 3.0 { Some(pa_upper_bound(l, spec.tau, spec.p)?) } else { None };
            Ok(GridPoint::from_hits(l as f64, hits, spec.trials, bound))
        })
        .collect()
}

/// Frequency with which iid(`p_a`) sequences are *not* flagged against
/// typical `p`, with `miss_upper_bound` as the bound column when
/// `alpha = 3`.
pub fn simulate_miss(spec: &BoundSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    if spec.p == spec.p_a {
        return Err(Error::DegenerateAlternative(spec.p));
    }
    spec.lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let threshold = spec.count_threshold(l);
            let hits =
                count_hits(spec.seed, STREAM_MISS + i as u64, spec.trials, l, spec.p_a, |k| !spec.flags(l, k, threshold));
            let bound = if spec.alpha == 3.0 { Some(miss_upper_bound(l, spec.tau, spec.p, spec.p_a)?) } else { None };
            Ok(GridPoint::from_hits(l as f64, hits, spec.trials, bound))
        })
        .collect()
}

/// Fair-coin stream scanned with the generalised criterion for a grid of
/// exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub alphas: Vec<f64>,
    pub tau: f64,
    pub stream_len: usize,
    /// Longest window tested.
    pub l_max: usize,
    /// Number of independent streams.
    pub runs: u64,
    pub seed: u64,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            tau: 12.0,
            stream_len: 1 << 16,
            l_max: 1024,
            runs: 20,
            seed: 1,
        }
    }
}

impl PhaseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a <= 4.0)) {
            return Err(Error::InvalidGrid(format!("alphas must lie in (0, 4]: {:?}", self.alphas)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidTau(self.tau));
        }
        if self.l_max == 0 || self.stream_len < self.l_max {
            return Err(Error::InvalidGrid(format!(
                "need 1 <= l_max <= stream length, got {} and {}",
                self.l_max, self.stream_len
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidGrid("need at least one run".into()));
        }
        Ok(())
    }
}

/// Covered fraction for one exponent, over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub mean: f64,
    /// `z` times the standard error of the mean over runs.
    pub half_width: f64,
    pub per_run: Vec<f64>,
}

impl PhasePoint {
    pub fn as_grid_point(&self) -> GridPoint {
        GridPoint {
            x: self.alpha,
            estimate: self.mean,
            half_width: self.half_width,
            bound: None,
            hits: 0,
            trials: self.per_run.len() as u64,
        }
    }
}

/// Fraction of positions of `walk` (prefix sums of `±1` steps) covered by
/// a window `n..n+l`, `l <= l_max`, whose squared sum exceeds `threshold[l]`.
fn covered_fraction(walk: &[i32], threshold: &[f64], l_max: usize) -> f64 {
    let len = walk.len() - 1;
    let mut covered = 0usize;
    let mut reach = 0usize;
    for n in 0..len {
        let top = l_max.min(len - n);
        let base = walk[n];
        let ahead = &walk[n + 1..=n + top];
        let mut last = 0usize;
        for (l, (&w, &t)) in ahead.iter().zip(&threshold[1..=top]).enumerate() {
            let s = f64::from(w - base);
            if s * s > t {
                last = l + 1;
            }
        }
        reach = reach.max(n + last);
        if n < reach {
            covered += 1;
        }
    }
    covered as f64 / len as f64
}

/// For each exponent, the mean fraction of samples lying inside at least one
/// window of length at most `l_max` with `|2k - l| > sqrt(l (2 tau ln 2 +
/// alpha ln l))`.
pub fn phase_transition(spec: &PhaseSpec) -> Result<Vec<PhasePoint>> {
    spec.validate()?;
    let walks: Vec<Vec<i32>> = (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = trial_rng(spec.seed, STREAM_PHASE, r);
            let mut walk = Vec::with_capacity(spec.stream_len + 1);
            walk.push(0i32);
            let mut s = 0i32;
            for _ in 0..spec.stream_len {
                s += if rng.random::<bool>() { 1 } else { -1 };
                walk.push(s);
            }
            walk
        })
        .collect();
    Ok(spec
        .alphas
        .iter()
        .map(|&alpha| {
            let threshold: Vec<f64> = (0..=spec.l_max)
                .map(|l| {
                    let lf = l as f64;
                    lf * (2.0 * spec.tau * LN_2 + alpha * lf.max(1.0).ln())
                })
                .collect();
            let per_run: Vec<f64> = walks.par_iter().map(|w| covered_fraction(w, &threshold, spec.l_max)).collect();
            let n = per_run.len() as f64;
            let mean = per_run.iter().sum::<f64>() / n;
            let var = if per_run.len() > 1 {
                per_run.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            PhasePoint { alpha, mean, half_width: Z_CONFIDENCE * (var / n).sqrt(), per_run }
        })
        .collect())
}

/// Frequency with which fair-coin sequences compress under the multi-depth
/// CTW coder by more than `tau` bits: `L_A + tau < l`.
pub fn simulate_ctw_intrinsic(lengths: &[usize], tau: f64, max_depth: usize, trials: u64, seed: u64) -> Result<Vec<GridPoint>> {
    check_lengths(lengths)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidTau(tau));
    }
    if trials == 0 {
        return Err(Error::InvalidGrid("need at least one trial".into()));
    }
    let max_len = *lengths.last().expect("checked non-empty");
    Ok(lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let stream = STREAM_CTW + i as u64;
            let make = || -> Box<dyn WindowCoder + Send> {
                if max_len <= BlockCoder::MAX_WINDOW {
                    Box::new(BlockCoder::new(max_depth))
                } else {
                    Box::new(SequentialCoder::new(max_depth))
                }
            };
            let hits = (0..trials)
                .into_par_iter()
                .map_init(make, |coder, t| {
                    let mut rng = trial_rng(seed, stream, t);
                    coder.reset();
                    for _ in 0..l {
                        coder.push(u8::from(rng.random::<bool>()));
                    }
                    let atypical = coder.best().0 + log_star_unchecked(l as u64);
                    atypical + tau < l as f64
                })
                .filter(|&hit| hit)
                .count() as u64;
            GridPoint::from_hits(l as f64, hits, trials, None)
        })
        .collect())
}

/// Finite-state source emitting one bit per transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    transition: Vec<Vec<f64>>,
    /// Bit emitted on the transition `i -> j`; `None` where the transition
    /// has probability zero.
    emission: Vec<Vec<Option<u8>>>,
}

impl MarkovSpec {
    pub fn new(transition: Vec<Vec<f64>>, emission: Vec<Vec<Option<u8>>>) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::InvalidChain("no states".into()));
        }
        if emission.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidChain("transition and emission must be square and of equal size".into()));
        }
        for (i, (row, emit)) in transition.iter().zip(&emission).enumerate() {
            if emit.len() != n {
                return Err(Error::InvalidChain(format!("emission row {i} has {} entries", emit.len())));
            }
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidChain(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChain(format!("row {i} sums to {sum}")));
            }
            for (j, (&p, &e)) in row.iter().zip(emit).enumerate() {
                match e {
                    None if p > 0.0 => {
                        return Err(Error::InvalidChain(format!("transition {i}->{j} has no emission")));
                    }
                    Some(b) if b > 1 => return Err(Error::InvalidChain(format!("emission {b} is not a bit"))),
                    _ => {}
                }
            }
        }
        Ok(Self { transition, emission })
    }

    /// Parses rows separated by `;` with entries separated by whitespace or
    /// commas. Emission entries are `0`, `1` or `x` for impossible.
    pub fn parse(transition: &str, emission: &str) -> Result<Self> {
        let rows = |text: &str| -> Vec<Vec<String>> {
            text.trim()
                .trim_start_matches('[')
                .trim_end_matches(']')
                .split(';')
                .map(|r| r.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(String::from).collect())
                .collect()
        };
        let bad = |t: &str| Error::InvalidChain(format!("cannot read entry {t:?}"));
        let t = rows(transition)
            .into_iter()
            .map(|r| r.iter().map(|v| v.parse::<f64>().map_err(|_| bad(v))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let e = rows(emission)
            .into_iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v.as_str() {
                        "0" => Ok(Some(0)),
                        "1" => Ok(Some(1)),
                        "x" | "X" => Ok(None),
                        other => Err(bad(other)),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(t, e)
    }

    /// Three-state cycle with self-loops of probability 0.05, emitting
    /// mostly `1 0 1`.
    pub fn cycle_101() -> Self {
        Self::parse(".05 .95 0; 0 .05 .95; .95 0 .05", "0 1 x; x 1 0; 1 x 0").expect("valid chain")
    }

    /// Same transitions as [`MarkovSpec::cycle_101`], emitting mostly `1 0 0`.
    pub fn cycle_100() -> Self {
        Self::parse(".05 .95 0; 0 .05 .95; .95 0 .05", "0 1 x; x 1 0; 0 x 1").expect("valid chain")
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    /// Runs the chain from `state` for `len` steps, appending the emitted
    /// bits to `out` and leaving the final state in `state`.
    pub fn generate_into<R: Rng>(&self, len: usize, state: &mut usize, rng: &mut R, out: &mut Vec<u8>) {
        for _ in 0..len {
            let u: f64 = rng.random();
            let row = &self.transition[*state];
            let mut acc = 0.0;
            let mut next = row.len() - 1;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    next = j;
                    break;
                }
            }
            // rounding can leave `u` past the last positive entry
            while row[next] == 0.0 {
                next -= 1;
            }
            out.push(self.emission[*state][next].expect("positive transitions emit"));
            *state = next;
        }
    }

    pub fn generate<R: Rng>(&self, len: usize, rng: &mut R) -> BitSequence {
        let mut state = rng.random_range(0..self.states());
        let mut out = Vec::with_capacity(len);
        self.generate_into(len, &mut state, rng, &mut out);
        BitSequence::from(out)
    }
}

/// Typical coder that keeps learning: a CTW tree trained like a frozen
/// model but updated with every symbol it codes.
#[derive(Debug, Clone)]
pub struct AdaptiveCtw {
    tree: ContextTree,
}

impl AdaptiveCtw {
    /// Trains on `seq`, using its first `depth` bits as context only.
    pub fn train(seq: &[u8], depth: usize) -> Result<Self> {
        if seq.len() <= depth {
            return Err(Error::TrainingTooShort { depth });
        }
        let mut tree = ContextTree::new(depth);
        for i in depth..seq.len() {
            tree.update(&seq[i - depth..i], seq[i]);
        }
        Ok(Self { tree })
    }
}

impl TypicalCoder for AdaptiveCtw {
    fn context_depth(&self) -> usize {
        self.tree.max_depth()
    }

    fn symbol_costs(&self, x: &[u8]) -> Vec<f64> {
        let mut tree = self.tree.clone();
        let depth = tree.max_depth();
        (0..x.len())
            .map(|i| -tree.update(&x[i.saturating_sub(depth)..i], x[i]).log2())
            .collect()
    }

    fn describe(&self) -> String {
        format!("adaptive-ctw(depth={})", self.tree.max_depth())
    }
}

/// Frozen versus adaptive typical coding of a stream with a planted
/// segment from a different source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezingSpec {
    pub typical: MarkovSpec,
    pub anomalous: MarkovSpec,
    pub train_len: usize,
    pub test_len: usize,
    pub segment_start: usize,
    /// Zero for a test stream of typical data only.
    pub segment_len: usize,
    /// Context depth of both typical coders.
    pub model_depth: usize,
    pub scan: ScanConfig,
    pub seed: u64,
}

impl Default for FreezingSpec {
    fn default() -> Self {
        Self {
            typical: MarkovSpec::cycle_101(),
            anomalous: MarkovSpec::cycle_100(),
            train_len: 100_000,
            test_len: 10_000,
            segment_start: 4_000,
            segment_len: 2_000,
            model_depth: 8,
            scan: ScanConfig::default(),
            seed: 1,
        }
    }
}

/// Both scans of one freezing run.
#[derive(Debug, Clone)]
pub struct FreezingOutcome {
    pub test: BitSequence,
    pub segment: Range<usize>,
    pub frozen_model: FrozenModel,
    pub frozen: ScanProfile,
    pub adaptive: ScanProfile,
}

impl FreezingOutcome {
    /// Whether the frozen scan's global minimiser starts inside the segment
    /// with a score below `-tau`.
    pub fn frozen_detects(&self, tau: f64) -> bool {
        self.frozen
            .argmin()
            .is_some_and(|(n, w)| self.segment.contains(&n) && w.score < -tau)
    }

    pub fn frozen_min(&self) -> f64 {
        self.frozen.argmin().map_or(f64::INFINITY, |(_, w)| w.score)
    }

    pub fn adaptive_min(&self) -> f64 {
        self.adaptive.argmin().map_or(f64::INFINITY, |(_, w)| w.score)
    }
}

/// Trains both typical coders on a stream from `spec.typical`, then scans a
/// test stream whose segment is generated by `spec.anomalous`.
pub fn freezing_demo(spec: &FreezingSpec) -> Result<FreezingOutcome> {
    if spec.segment_start + spec.segment_len > spec.test_len {
        return Err(Error::InvalidGrid(format!(
            "segment {}..{} does not fit a test stream of {}",
            spec.segment_start,
            spec.segment_start + spec.segment_len,
            spec.test_len
        )));
    }
    let training = spec.typical.generate(spec.train_len, &mut trial_rng(spec.seed, STREAM_TRAIN, 0));
    let frozen_model = train(&[&training], spec.model_depth)?;
    let adaptive = AdaptiveCtw::train(&training, spec.model_depth)?;

    let mut rng = trial_rng(spec.seed, STREAM_TEST, 0);
    let mut state = rng.random_range(0..spec.typical.states());
    let mut test = Vec::with_capacity(spec.test_len);
    let end = spec.segment_start + spec.segment_len;
    spec.typical.generate_into(spec.segment_start, &mut state, &mut rng, &mut test);
    spec.anomalous.generate_into(spec.segment_len, &mut state, &mut rng, &mut test);
    spec.typical.generate_into(spec.test_len - end, &mut state, &mut rng, &mut test);

    let mut profiles = scan_against(&test, &[&frozen_model, &adaptive], &spec.scan)?;
    let adaptive_profile = profiles.pop().expect("two profiles");
    let frozen_profile = profiles.pop().expect("two profiles");
    Ok(FreezingOutcome {
        test: BitSequence::from(test),
        segment: spec.segment_start..end,
        frozen_model,
        frozen: frozen_profile,
        adaptive: adaptive_profile,
    })
}
