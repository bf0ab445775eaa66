//! Plants a biased stretch in fair coin flips and locates it by scanning
//! against the exact fair-coin model.

use atypicality::iid::IidTypicalModel;
use atypicality::scanner::{flag_segments, scan, ScanConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (len, at, width) = (20_000usize, 9_000usize, 500usize);
    let x: Vec<u8> = (0..len)
        .map(|i| {
            let p = if (at..at + width).contains(&i) { 0.8 } else { 0.5 };
            rng.random_bool(p) as u8
        })
        .collect();

    let model = IidTypicalModel::new(0.5)?;
    let cfg = ScanConfig::default();
    let started = std::time::Instant::now();
    let profile = scan(&x, &model, &cfg)?;
    let (n, best) = profile.argmin().expect("non-empty profile");
    println!("scanned {len} bits in {:.1?}", started.elapsed());
    println!("insertion at {at}..{}", at + width);
    println!("best window starts at {n}, length {}, depth {}, gain {:.1} bits", best.length, best.depth, -best.score);
    for f in flag_segments(&profile, 16.0).iter().take(5) {
        println!("flag {}..{} score {:.1}", f.span_start, f.span_end, f.score);
    }
    Ok(())
}
