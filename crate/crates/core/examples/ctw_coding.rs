//! Code lengths of a second-order Markov source under context-tree weighting
//! of increasing depth, and the self-description length used for atypicality.

use atypicality::ctw::{atypical_codelength, ctw_codelength, BlockCoder, WindowCoder};
use atypicality::{binary_entropy, kt_block_codelength, KtCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p_one = [0.1, 0.6, 0.3, 0.85];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = vec![0u8, 0];
    while x.len() < 50_000 {
        let s = 2 * x[x.len() - 2] as usize + x[x.len() - 1] as usize;
        x.push(rng.random_bool(p_one[s]) as u8);
    }
    let l = x.len() as f64;
    println!("KT (memoryless): {:.4} bits/symbol", kt_block_codelength(KtCounts::of(&x)) / l);
    for depth in [0, 1, 2, 4, 8] {
        println!("CTW depth {depth}: {:.4} bits/symbol", ctw_codelength(&x, depth, &[]) / l);
    }
    println!("entropy of the empirical marginal: {:.4}", binary_entropy(KtCounts::of(&x).b as f64 / l)?);

    let best = atypical_codelength(&x[..2000], 8)?;
    println!(
        "first 2000 bits: {:.1} bits at depth {} (log* penalties {:.2} + {:.2})",
        best.total_bits, best.best_depth, best.depth_penalty, best.length_penalty
    );

    let mut coder = BlockCoder::new(8);
    for &b in &x[..512] {
        coder.push(b);
    }
    let (bits, depth) = coder.best();
    println!("incremental window of 512: {bits:.1} bits at depth {depth}");
    Ok(())
}
