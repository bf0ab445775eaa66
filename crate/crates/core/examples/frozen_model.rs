//! Trains a frozen model, persists it and reuses it as the typical coder.

use atypicality::frozen::{train_with_codelength, typical_codelength_frozen, FrozenModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // sticky source: repeats the previous bit with probability 0.9
    let mut training = vec![0u8];
    for _ in 1..20_000 {
        let last = *training.last().unwrap();
        training.push(if rng.random_bool(0.9) { last } else { 1 - last });
    }
    let (model, bits) = train_with_codelength(&[&training], 6)?;
    println!("trained {} nodes, training code length {bits:.1} bits", model.node_count());

    let path = std::env::temp_dir().join("atypicality-example.atyp");
    model.write_to(std::fs::File::create(&path)?)?;
    let loaded = FrozenModel::read_from(std::fs::File::open(&path)?)?;
    assert_eq!(loaded, model);
    println!("model file {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let sticky: Vec<u8> = training[..1000].to_vec();
    let alternating: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
    for (name, x) in [("sticky", &sticky), ("alternating", &alternating)] {
        println!("{name:>12}: {:.1} bits for 1000 symbols", typical_codelength_frozen(&loaded, x, &[]));
    }
    Ok(())
}
