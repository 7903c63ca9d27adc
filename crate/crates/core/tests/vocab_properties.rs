use std::collections::BTreeMap;

use fraggen::vocab::{
    attachment_count, parse_mask_token, Vocabulary, EOS, PAD, SOS, SPECIAL_TOKENS,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const POOL: [&str; 12] = [
    "*C",
    "*CC",
    "*N",
    "*O",
    "*c1ccccc1",
    "*C*",
    "*CC*",
    "*N*",
    "*OC*",
    "*C(=O)*",
    "*S(=O)(=O)*",
    "*Cl",
];

fn seven_member_group() -> Vocabulary {
    let corpus: Vec<Vec<String>> = (0..7)
        .map(|i| vec![format!("*{}", "C".repeat(i + 1))])
        .collect();
    Vocabulary::build(&corpus, 10).unwrap()
}

#[test]
fn unmasking_is_uniform_chi_square() {
    let v = seven_member_group();
    assert_eq!(v.mask_groups()["1_1"].len(), 7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let n = 10_000;
    for _ in 0..n {
        *counts
            .entry(v.unmask("1_1", &mut rng).unwrap().to_string())
            .or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 7);
    let expected = n as f64 / 7.0;
    let stat: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(6.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat:.3}, p = {p:.4}");
}

#[test]
fn published_style_example() {
    // Frequencies 3, 3 and 12 at k = 10: the two rare one-attachment fragments
    // share one token, the frequent one stays.
    let mut corpus = vec![vec!["*CCO"]; 3];
    corpus.extend(vec![vec!["*CCN"]; 3]);
    corpus.extend(vec![vec!["*c1ccccc1"]; 12]);
    let v = Vocabulary::build(&corpus, 10).unwrap();
    assert_eq!(v.tokens(), &["<PAD>", "<SOS>", "<EOS>", "*c1ccccc1", "3_1"]);
    assert_eq!(v.frequency(v.id("3_1").unwrap()), 6);
    assert_eq!(v.mask_groups()["3_1"], vec!["*CCN", "*CCO"]);
}

fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(
        prop::collection::vec(
            prop::sample::select(POOL.to_vec()).prop_map(str::to_string),
            1..6,
        ),
        1..40,
    )
}

proptest! {
    #[test]
    fn masking_partitions_by_threshold(corpus in corpus_strategy(), k in 0u64..12) {
        let v = Vocabulary::build(&corpus, k).unwrap();
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for f in corpus.iter().flatten() {
            *counts.entry(f.as_str()).or_insert(0) += 1;
        }
        prop_assert_eq!(&v.tokens()[..3], &SPECIAL_TOKENS.map(str::to_string)[..]);
        prop_assert_eq!((PAD, SOS, EOS), (0, 1, 2));
        prop_assert!(v.tokens()[3..].windows(2).all(|w| w[0] < w[1]));
        for (frag, &f) in &counts {
            match v.id(frag) {
                Some(id) => {
                    prop_assert!(f >= k);
                    prop_assert_eq!(v.frequency(id), f);
                }
                None => {
                    prop_assert!(f < k);
                    let token = format!("{f}_{}", attachment_count(frag));
                    prop_assert!(v.mask_groups()[&token].contains(&frag.to_string()));
                }
            }
        }
        for (token, members) in v.mask_groups() {
            let (f, a) = parse_mask_token(token).unwrap();
            prop_assert!(f < k);
            prop_assert!(members.iter().all(|m| counts[m.as_str()] == f && attachment_count(m) == a));
            prop_assert_eq!(v.frequency(v.id(token).unwrap()), f * members.len() as u64);
        }
        let total: u64 = (3..v.len() as u32).map(|id| v.frequency(id)).sum();
        prop_assert_eq!(total, corpus.iter().map(|s| s.len() as u64).sum::<u64>());
    }

    #[test]
    fn text_form_round_trips(corpus in corpus_strategy(), k in 0u64..12) {
        let v = Vocabulary::build(&corpus, k).unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        prop_assert_eq!(back.content_hash(), v.content_hash());
        prop_assert_eq!(back, v);
    }

    #[test]
    fn encode_then_unmask_recovers_attachment_counts(corpus in corpus_strategy(), k in 0u64..12, seed: u64) {
        let v = Vocabulary::build(&corpus, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for seq in &corpus {
            let ids = v.encode(seq).unwrap();
            prop_assert_eq!(ids[0], SOS);
            prop_assert_eq!(*ids.last().unwrap(), EOS);
            let tokens = v.decode(&ids).unwrap();
            prop_assert_eq!(tokens.len(), seq.len());
            for (tok, frag) in tokens.iter().zip(seq) {
                if v.is_mask(v.id(tok).unwrap()) {
                    let drawn = v.unmask(tok, &mut rng).unwrap();
                    prop_assert_eq!(attachment_count(drawn), attachment_count(frag));
                } else {
                    prop_assert_eq!(tok, frag);
                }
            }
        }
    }
}
