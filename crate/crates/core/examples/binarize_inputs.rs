//! Turns measurements, text, DNA and RANDU output into bit sequences.

use atypicality::binarize::{consecutive_comparison, fasta_to_bits, randu_bits, word_lengths, DnaMap, InvalidBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rr_intervals = [0.81, 0.80, 0.83, 0.83, 0.79, 0.84, 0.86, 0.85];
    println!("RR intervals -> {}", consecutive_comparison(&rr_intervals, 1)?);

    let text = "It was the best of times, it was the worst of times.";
    let lengths: Vec<f64> = word_lengths(text).into_iter().map(|n| n as f64).collect();
    println!("word lengths {lengths:?} -> {}", consecutive_comparison(&lengths, 1)?);

    let fasta = ">fragment\nACGTTGCA\nNNACGT\n";
    let map = DnaMap::parse("A=00,C=01,G=10,T=11")?;
    println!("DNA (skipping N) -> {}", fasta_to_bits(fasta, &map, InvalidBase::Skip)?);
    match fasta_to_bits(fasta, &map, InvalidBase::Reject) {
        Ok(_) => unreachable!(),
        Err(e) => println!("DNA (strict) -> error: {e}"),
    }

    let bits = randu_bits(64, 1)?;
    println!("RANDU seed 1 -> {bits} ({} ones)", bits.ones());
    Ok(())
}
