//! A frozen typical coder exposes a segment from a different source that a
//! coder still learning on the test data absorbs.

use atypicality::montecarlo::{freezing_demo, FreezingSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1u64);
    let out = freezing_demo(&FreezingSpec { seed, ..FreezingSpec::default() })?;
    println!("anomalous segment {}..{}", out.segment.start, out.segment.end);
    for (name, profile) in [("frozen", &out.frozen), ("adaptive", &out.adaptive)] {
        let (n, w) = profile.argmin().expect("non-empty profile");
        println!("{name:>9}: minimum {:8.1} bits at {n} (length {})", w.score, w.length);
    }
    println!("frozen detects at tau=20: {}", out.frozen_detects(20.0));
    Ok(())
}
