//! Fraction of a fair-coin stream covered by flagged windows as the length
//! penalty exponent grows.

use atypicality::montecarlo::{phase_transition, PhaseSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PhaseSpec { runs: 5, ..PhaseSpec::default() };
    println!("tau={} stream={} l_max={} runs={}", spec.tau, spec.stream_len, spec.l_max, spec.runs);
    for p in phase_transition(&spec)? {
        println!("  alpha={:<4} covered {:.3e} +- {:.1e}", p.alpha, p.mean, p.half_width);
    }
    Ok(())
}
