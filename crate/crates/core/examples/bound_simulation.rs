//! Monte-Carlo frequencies of false alarms and misses next to their bounds.

use atypicality::montecarlo::{simulate_miss, simulate_pa, BoundSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200_000u64);
    let pa = BoundSpec { p: 0.3, tau: 1.0, trials, ..BoundSpec::default() };
    println!("false alarms, p={} tau={}", pa.p, pa.tau);
    for g in simulate_pa(&pa)? {
        println!("  l={:>5} {:.2e} +- {:.1e} (bound {:.2e})", g.x, g.estimate, g.half_width, g.bound.unwrap_or(f64::NAN));
    }
    let miss = BoundSpec { p: 0.5, p_a: 0.3, tau: 2.0, lengths: vec![100, 200, 400], trials, ..BoundSpec::default() };
    println!("misses, p={} p_a={} tau={}", miss.p, miss.p_a, miss.tau);
    for g in simulate_miss(&miss)? {
        println!("  l={:>5} {:.2e} +- {:.1e} (bound {:.2e})", g.x, g.estimate, g.half_width, g.bound.unwrap_or(f64::NAN));
    }
    Ok(())
}
