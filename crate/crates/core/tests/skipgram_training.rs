use std::path::PathBuf;

use fraggen::chem::FragmentOptions;
use fraggen::pipeline::corpus::kept;
use fraggen::pipeline::{preprocess, read_smiles_lines};
use fraggen::skipgram::{pair_loss, pair_loss_grad, train_skipgram, SkipGramConfig};
use fraggen::vocab::Vocabulary;
use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_ids(n: usize) -> (Vec<Vec<u32>>, usize) {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/zinc_clean_leads_50k.smi");
    let mut smiles = read_smiles_lines(&std::fs::read_to_string(path).unwrap());
    smiles.truncate(n + n / 10);
    let p = preprocess(&smiles, &FragmentOptions::default());
    let (_, mut seqs) = kept(&p.records);
    seqs.truncate(n);
    assert_eq!(seqs.len(), n);
    let v = Vocabulary::build(&seqs, 10).unwrap();
    let ids = seqs.iter().map(|s| v.encode(s).unwrap()).collect();
    (ids, v.len())
}

fn loss_of(t: &[f64], c: &[f64], negs: &[Vec<f64>]) -> f64 {
    let views: Vec<ArrayView1<f64>> = negs
        .iter()
        .map(|n| ArrayView1::from(n.as_slice()))
        .collect();
    pair_loss(ArrayView1::from(t), ArrayView1::from(c), &views)
}

#[test]
fn gradient_matches_finite_differences_at_100_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 16;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-0.8..0.8)).collect()
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = draw(&mut rng);
        let c = draw(&mut rng);
        let negs: Vec<Vec<f64>> = (0..5).map(|_| draw(&mut rng)).collect();
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = pair_loss_grad(&t, &c, &refs);
        assert!((g.loss - loss_of(&t, &c, &negs)).abs() < 1e-12);
        // Pick one coordinate of one of the seven vectors.
        let which = rng.random_range(0..7);
        let k = rng.random_range(0..d);
        let (mut tp, mut cp, mut np) = (t.clone(), c.clone(), negs.clone());
        let (mut tm, mut cm, mut nm) = (t.clone(), c.clone(), negs.clone());
        let analytic = match which {
            0 => {
                tp[k] += h;
                tm[k] -= h;
                g.target[k]
            }
            1 => {
                cp[k] += h;
                cm[k] -= h;
                g.context[k]
            }
            n => {
                np[n - 2][k] += h;
                nm[n - 2][k] -= h;
                g.negatives[n - 2][k]
            }
        };
        let numeric = (loss_of(&tp, &cp, &np) - loss_of(&tm, &cm, &nm)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

#[test]
fn training_on_1k_sequences_lowers_the_loss_and_stays_bounded() {
    let (ids, v) = corpus_ids(1000);
    let cfg = SkipGramConfig {
        epochs: 3,
        seed: 11,
        ..Default::default()
    };
    let run = train_skipgram(&ids, v, &cfg).unwrap();
    let l = &run.epoch_losses;
    assert_eq!(l.len(), 3);
    assert!(l[0] > l[1] && l[1] > l[2], "{l:?}");
    assert!(run.embeddings.max_row_norm() < 100.0);
    assert!(run.embeddings.target.iter().all(|x| x.is_finite()));
    assert_eq!(run.embeddings.target.dim(), (v, 64));
}

#[test]
fn same_seed_same_matrix() {
    let (ids, v) = corpus_ids(300);
    let cfg = SkipGramConfig {
        epochs: 2,
        seed: 5,
        ..Default::default()
    };
    let a = train_skipgram(&ids, v, &cfg).unwrap();
    let b = train_skipgram(&ids, v, &cfg).unwrap();
    assert_eq!(a.embeddings.to_text(), b.embeddings.to_text());
    let c = train_skipgram(&ids, v, &SkipGramConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.embeddings.target, c.embeddings.target);
}
