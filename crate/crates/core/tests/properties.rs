use atypicality::binarize::{consecutive_comparison, parse_bit_text, write_bit_text, DnaMap, InvalidBase};
use atypicality::codelength::{kt_block_codelength, log_star, KtCounts};
use atypicality::ctw::{atypical_codelength, ctw_codelength, BlockCoder, SequentialCoder, WindowCoder};
use atypicality::frozen::{train, FrozenModel};
use atypicality::iid::{atypical_codelength_iid, iid_atypicality_test, typical_codelength_iid, IidTypicalModel};
use atypicality::scanner::{flag_segments, scan, ScanConfig, TypicalCoder};
use proptest::prelude::*;

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..=max)
}

proptest! {
    #[test]
    fn bit_text_round_trips(x in bits(500), width in 1usize..100) {
        let mut out = Vec::new();
        write_bit_text(&mut out, &x, width).unwrap();
        let parsed = parse_bit_text(std::str::from_utf8(&out).unwrap()).unwrap();
        prop_assert_eq!(parsed.as_slice(), &x[..]);
    }

    #[test]
    fn dna_round_trips(bases in "[ACGTacgt]{1,200}") {
        let map = DnaMap::default();
        let encoded = map.encode(&bases, InvalidBase::Reject).unwrap();
        prop_assert_eq!(encoded.len(), 2 * bases.len());
        prop_assert_eq!(map.decode(&encoded).unwrap(), bases.to_ascii_uppercase());
    }

    #[test]
    fn comparison_has_one_bit_per_step(values in prop::collection::vec(-1e6f64..1e6, 2..200), seed in any::<u64>()) {
        let b = consecutive_comparison(&values, seed).unwrap();
        prop_assert_eq!(b.len(), values.len() - 1);
        for (i, &bit) in b.iter().enumerate() {
            if values[i + 1] != values[i] {
                prop_assert_eq!(bit == 1, values[i + 1] > values[i]);
            }
        }
    }

    #[test]
    fn criterion_is_the_code_length_comparison(x in bits(300), p in 0.05f64..0.95, tau in 0f64..20.0) {
        let model = IidTypicalModel::new(p).unwrap();
        let v = iid_atypicality_test(&x, &model, tau).unwrap();
        let lt = typical_codelength_iid(&x, &model);
        let la = atypical_codelength_iid(&x).unwrap();
        prop_assert!((v.delta - (la + tau - lt)).abs() < 1e-9);
        if (la + tau - lt).abs() > 1e-9 {
            prop_assert_eq!(v.is_atypical, la + tau < lt);
        }
    }

    #[test]
    fn ctw_never_costs_more_than_a_bit_over_kt(x in bits(400), depth in 0usize..8) {
        let kt = kt_block_codelength(KtCounts::of(&x));
        prop_assert!(ctw_codelength(&x, depth, &[]) <= kt + 1.0 + 1e-9);
    }

    #[test]
    fn window_coders_agree(x in bits(300), depth in 0usize..6) {
        let mut block = BlockCoder::new(depth);
        let mut seq = SequentialCoder::new(depth);
        for (i, &b) in x.iter().enumerate() {
            block.push(b);
            seq.push(b);
            for d in 0..=depth {
                let fresh = ctw_codelength(&x[..=i], d, &[]);
                prop_assert!((block.codelength(d) - fresh).abs() < 1e-7);
                prop_assert!((seq.codelength(d) - fresh).abs() < 1e-7);
            }
        }
        let whole = atypical_codelength(&x, depth).unwrap();
        let (bits, d) = block.best();
        prop_assert!((bits + log_star(x.len() as u64).unwrap() - whole.total_bits).abs() < 1e-7);
        prop_assert_eq!(d, whole.best_depth);
    }

    #[test]
    fn frozen_model_file_round_trips(train_bits in prop::collection::vec(0u8..=1, 64..2000), depth in 0usize..10) {
        let model = train(&[&train_bits], depth).unwrap();
        let again = FrozenModel::read_from(&model.to_bytes()[..]).unwrap();
        prop_assert_eq!(&again, &model);
        prop_assert_eq!(again.state_digest(), model.state_digest());
    }

    #[test]
    fn larger_tau_flags_a_subset(x in bits(600), t1 in 0f64..10.0, extra in 0f64..10.0) {
        prop_assume!(x.len() >= 16);
        let cfg = ScanConfig::new(8, 64, 3, None).unwrap();
        let profile = scan(&x, &IidTypicalModel::new(0.5).unwrap(), &cfg).unwrap();
        let covered = |tau: f64| -> Vec<bool> {
            let mut c = vec![false; x.len()];
            for f in flag_segments(&profile, tau) {
                for slot in &mut c[f.span_start..f.span_end] {
                    *slot = true;
                }
            }
            c
        };
        let (low, high) = (covered(t1), covered(t1 + extra));
        prop_assert!(low.iter().zip(&high).all(|(&l, &h)| l || !h));
    }

    #[test]
    fn frozen_costs_are_proper(train_bits in prop::collection::vec(0u8..=1, 64..3000), test in bits(200), depth in 0usize..8) {
        let model = train(&[&train_bits], depth).unwrap();
        let costs = TypicalCoder::symbol_costs(&model, &test);
        prop_assert_eq!(costs.len(), test.len());
        prop_assert!(costs.iter().all(|c| c.is_finite() && *c > 0.0));
    }
}
