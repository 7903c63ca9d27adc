use std::path::PathBuf;

use fraggen::chem::{
    parse_smiles, reassemble, write_smiles, Fragment, FragmentOptions, FragmentSequence,
};
use fraggen::evalmetrics::canonicalize;
use fraggen::pipeline::corpus::kept;
use fraggen::pipeline::{preprocess, read_smiles_lines};
use fraggen::sampler::{sample_batch, SampleConfig};
use fraggen::seqmodel::{ModelDims, ModelParameters};
use fraggen::vocab::Vocabulary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn real_vocab(k: u64) -> Vocabulary {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/zinc_clean_leads_50k.smi");
    let mut smiles = read_smiles_lines(&std::fs::read_to_string(path).unwrap());
    smiles.truncate(400);
    let (_, seqs) = kept(&preprocess(&smiles, &FragmentOptions::default()).records);
    Vocabulary::build(&seqs, k).unwrap()
}

/// A random model whose output layer favors EOS enough to end most sequences.
fn model(v: &Vocabulary, seed: u64) -> ModelParameters {
    let dims = ModelDims {
        vocab_size: v.len(),
        embed_dim: 8,
        hidden: 12,
        latent: 6,
        layers: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ModelParameters::init(dims, None, &mut rng).unwrap();
    p.w_out.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    p.b_out[2] = 3.0;
    p
}

fn sampling(count: usize, lfm: bool) -> SampleConfig {
    SampleConfig {
        count,
        seed: 21,
        lfm_enabled: lfm,
        temperature: Some(1.0),
        decode_batch: 64,
        ..Default::default()
    }
}

fn rebuild(fragments: &[String]) -> String {
    let seq = FragmentSequence {
        frags: fragments
            .iter()
            .map(|f| Fragment::new(parse_smiles(f).unwrap()))
            .collect(),
    };
    write_smiles(&reassemble(&seq).unwrap(), true)
}

#[test]
fn accepted_molecules_are_valid_canonical_reassemblies() {
    let v = real_vocab(3);
    let p = model(&v, 1);
    let r = sample_batch(&p, &v, &sampling(200, true)).unwrap();
    assert!(!r.molecules.is_empty());
    assert_eq!(
        r.attempts,
        r.molecules.len() + r.rejected_structure + r.rejected_length
    );
    for (smiles, frags) in r.molecules.iter().zip(&r.sequences) {
        assert_eq!(canonicalize(smiles).as_deref(), Some(smiles.as_str()));
        assert_eq!(&rebuild(frags), smiles);
        for f in frags {
            let known = v.id(f).is_some_and(|id| !v.is_mask(id))
                || v.mask_groups().values().any(|g| g.contains(f));
            assert!(known, "{f} is not a vocabulary fragment");
        }
    }
}

#[test]
fn without_masking_only_plain_tokens_are_emitted() {
    let v = real_vocab(3);
    assert!(!v.mask_groups().is_empty());
    let p = model(&v, 2);
    let r = sample_batch(&p, &v, &sampling(100, false)).unwrap();
    for frags in &r.sequences {
        for f in frags {
            let id = v.id(f).expect("plain token");
            assert!(!v.is_mask(id));
        }
    }
}

#[test]
fn report_is_independent_of_decode_batch_and_reproducible() {
    let v = real_vocab(3);
    let p = model(&v, 3);
    let base = sample_batch(&p, &v, &sampling(60, true)).unwrap();
    for batch in [1, 7, 500] {
        let cfg = SampleConfig {
            decode_batch: batch,
            ..sampling(60, true)
        };
        assert_eq!(
            sample_batch(&p, &v, &cfg).unwrap(),
            base,
            "decode_batch {batch}"
        );
    }
    let other = SampleConfig {
        seed: 22,
        ..sampling(60, true)
    };
    assert_ne!(
        sample_batch(&p, &v, &other).unwrap().molecules,
        base.molecules
    );
}

#[test]
fn exhausted_budget_is_flagged() {
    let v = real_vocab(3);
    let mut p = model(&v, 4);
    // EOS can never win: every attempt runs out of steps.
    p.b_out[2] = -1e6;
    let cfg = SampleConfig {
        temperature: None,
        max_len: 3,
        ..sampling(5, true)
    };
    let r = sample_batch(&p, &v, &cfg).unwrap();
    assert!(r.incomplete);
    assert_eq!(r.attempts, 50);
    assert_eq!(r.rejected_length, 50);
}
