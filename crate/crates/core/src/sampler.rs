//! Molecule generation: latent draw, argmax decoding, unmasking, chain check, reassembly.

use std::collections::HashMap;

use fraggen_chem::{
    check_valence, is_linear_chain, parse_smiles, reassemble, write_smiles, Fragment,
    FragmentSequence,
};
use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqmodel::{decode_step_batch, DecoderState, ModelParameters};
use crate::vocab::{Vocabulary, EOS, PAD, SOS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("invalid sample config: {0}")]
    Config(String),
    #[error("vocabulary has {vocab} tokens but the model outputs {model}")]
    VocabMismatch { vocab: usize, model: usize },
    #[error("vocabulary fragment {fragment:?} does not parse: {message}")]
    BadFragment { fragment: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    /// Decoding steps allowed, the EOS step included.
    pub max_len: usize,
    pub seed: u64,
    pub lfm_enabled: bool,
    /// `None` is argmax decoding. `Some(t)` samples from the softmax at temperature `t`.
    pub temperature: Option<f64>,
    /// Attempts decoded together.
    pub decode_batch: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            count: 20_000,
            max_len: 12,
            seed: 0,
            lfm_enabled: true,
            temperature: None,
            decode_batch: 512,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), SampleError> {
        let bad = |m: &str| Err(SampleError::Config(m.to_string()));
        if self.count == 0 {
            return bad("count must be >= 1");
        }
        if self.max_len < 2 {
            return bad("max_len must be >= 2");
        }
        if self.decode_batch == 0 {
            return bad("decode_batch must be >= 1");
        }
        if let Some(t) = self.temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad("temperature must be positive");
            }
        }
        Ok(())
    }
}

/// Result of one decoding attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Attempt {
    Accepted {
        smiles: String,
        fragments: Vec<String>,
    },
    /// Empty, non-linear, unmaskable or otherwise unassemblable sequence.
    RejectedStructure { fragments: Vec<String> },
    /// No EOS within `max_len` steps.
    RejectedLength,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleReport {
    pub molecules: Vec<String>,
    pub rejected_structure: usize,
    pub rejected_length: usize,
    pub attempts: usize,
    /// Attempt budget ran out before `count` molecules were accepted.
    pub incomplete: bool,
    /// Fragment sequence behind each accepted molecule.
    pub sequences: Vec<Vec<String>>,
}

/// Parsed fragments for every vocabulary token and mask-group member.
#[derive(Clone, Debug)]
pub struct FragmentLibrary {
    fragments: HashMap<String, Fragment>,
}

impl FragmentLibrary {
    pub fn from_vocab(vocab: &Vocabulary) -> Result<Self, SampleError> {
        let mut fragments = HashMap::new();
        let members = vocab.mask_groups().values().flatten();
        let plain = vocab
            .tokens()
            .iter()
            .enumerate()
            .filter(|&(id, _)| !Vocabulary::is_special(id as u32) && !vocab.is_mask(id as u32))
            .map(|(_, t)| t);
        for smiles in plain.chain(members) {
            let mol = parse_smiles(smiles).map_err(|e| SampleError::BadFragment {
                fragment: smiles.clone(),
                message: e.to_string(),
            })?;
            fragments.insert(smiles.clone(), Fragment::new(mol));
        }
        Ok(FragmentLibrary { fragments })
    }

    pub fn get(&self, smiles: &str) -> Option<&Fragment> {
        self.fragments.get(smiles)
    }
}

/// Random stream for attempt `index`: a pure function of `(seed, index)`.
pub fn attempt_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn choose(probs: ArrayView1<f64>, temperature: Option<f64>, rng: &mut ChaCha8Rng) -> u32 {
    let allowed = |id: usize| id != PAD as usize && id != SOS as usize;
    match temperature {
        None => {
            let mut best = EOS as usize;
            for (id, &p) in probs.iter().enumerate() {
                if allowed(id) && p > probs[best] {
                    best = id;
                }
            }
            // EOS is the lowest allowed id, so strict `>` keeps the lowest id among ties.
            best as u32
        }
        Some(t) => {
            let weights: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(id, &p)| if allowed(id) { p.powf(1.0 / t) } else { 0.0 })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut x = rng.random::<f64>() * total;
            for (id, w) in weights.iter().enumerate() {
                if *w > 0.0 && x < *w {
                    return id as u32;
                }
                x -= w;
            }
            weights
                .iter()
                .rposition(|&w| w > 0.0)
                .unwrap_or(EOS as usize) as u32
        }
    }
}

/// Decodes one row per rng. Each rng has already produced its row's `z`.
fn decode_rows(
    params: &ModelParameters,
    z: &Array2<f64>,
    rngs: &mut [ChaCha8Rng],
    cfg: &SampleConfig,
) -> Vec<(Vec<u32>, bool)> {
    let rows = z.nrows();
    let mut state = DecoderState::from_latent(params, z.view());
    let mut inputs = vec![SOS; rows];
    let mut out: Vec<(Vec<u32>, bool)> = vec![(Vec::new(), false); rows];
    let mut open = rows;
    for _ in 0..cfg.max_len {
        if open == 0 {
            break;
        }
        let (probs, next) = decode_step_batch(params, &inputs, &state);
        state = next;
        for (i, row) in out.iter_mut().enumerate() {
            if row.1 {
                inputs[i] = PAD;
                continue;
            }
            let tok = choose(probs.row(i), cfg.temperature, &mut rngs[i]);
            inputs[i] = tok;
            if tok == EOS {
                row.1 = true;
                open -= 1;
            } else {
                row.0.push(tok);
            }
        }
    }
    out
}

fn finish(
    tokens: &[u32],
    hit_eos: bool,
    vocab: &Vocabulary,
    library: &FragmentLibrary,
    lfm: bool,
    rng: &mut ChaCha8Rng,
) -> Attempt {
    if !hit_eos {
        return Attempt::RejectedLength;
    }
    let mut fragments = Vec::with_capacity(tokens.len());
    let mut unmaskable = false;
    for &id in tokens {
        let token = vocab.token(id).expect("decoded id is in range");
        if vocab.is_mask(id) {
            if !lfm {
                unmaskable = true;
                fragments.push(token.to_string());
                continue;
            }
            fragments.push(vocab.unmask(token, rng).expect("mask token").to_string());
        } else {
            fragments.push(token.to_string());
        }
    }
    if unmaskable {
        return Attempt::RejectedStructure { fragments };
    }
    let seq = FragmentSequence {
        frags: fragments
            .iter()
            .map(|f| {
                library
                    .get(f)
                    .expect("library covers the vocabulary")
                    .clone()
            })
            .collect(),
    };
    if !is_linear_chain(&seq.attachment_counts()) {
        return Attempt::RejectedStructure { fragments };
    }
    match reassemble(&seq) {
        Ok(mol) if check_valence(&mol) && mol.dummy_atoms().is_empty() => Attempt::Accepted {
            smiles: write_smiles(&mol, true),
            fragments,
        },
        _ => Attempt::RejectedStructure { fragments },
    }
}

fn check_pairing(params: &ModelParameters, vocab: &Vocabulary) -> Result<(), SampleError> {
    if params.b_out.len() != vocab.len() {
        return Err(SampleError::VocabMismatch {
            vocab: vocab.len(),
            model: params.b_out.len(),
        });
    }
    Ok(())
}

fn draw_latents(rngs: &mut [ChaCha8Rng], latent: usize) -> Array2<f64> {
    let mut z = Array2::zeros((rngs.len(), latent));
    for (mut row, rng) in z.rows_mut().into_iter().zip(rngs.iter_mut()) {
        row.mapv_inplace(|_| rng.sample(StandardNormal));
    }
    z
}

/// One attempt: `z ~ N(0, I)` from `rng`, decode, unmask with the same `rng`.
pub fn generate_one(
    params: &ModelParameters,
    vocab: &Vocabulary,
    library: &FragmentLibrary,
    rng: &mut ChaCha8Rng,
    cfg: &SampleConfig,
) -> Result<Attempt, SampleError> {
    cfg.validate()?;
    check_pairing(params, vocab)?;
    let mut rngs = [rng.clone()];
    let z = draw_latents(&mut rngs, params.w_mu.ncols());
    let (tokens, eos) = decode_rows(params, &z, &mut rngs, cfg)
        .pop()
        .expect("one row");
    let attempt = finish(&tokens, eos, vocab, library, cfg.lfm_enabled, &mut rngs[0]);
    *rng = rngs[0].clone();
    Ok(attempt)
}

/// Decodes attempts until `count` molecules are accepted or `10 × count`
/// attempts are spent. Attempt `i` uses [`attempt_rng`]`(seed, i)`, so the
/// report does not depend on `decode_batch`.
pub fn sample_batch(
    params: &ModelParameters,
    vocab: &Vocabulary,
    cfg: &SampleConfig,
) -> Result<SampleReport, SampleError> {
    let library = FragmentLibrary::from_vocab(vocab)?;
    sample_batch_with(params, vocab, &library, cfg)
}

pub fn sample_batch_with(
    params: &ModelParameters,
    vocab: &Vocabulary,
    library: &FragmentLibrary,
    cfg: &SampleConfig,
) -> Result<SampleReport, SampleError> {
    cfg.validate()?;
    check_pairing(params, vocab)?;
    let budget = cfg.count.saturating_mul(10);
    let mut report = SampleReport::default();
    let mut next = 0usize;
    while report.molecules.len() < cfg.count && next < budget {
        let need = cfg.count - report.molecules.len();
        let chunk = need.min(cfg.decode_batch).min(budget - next);
        let mut rngs: Vec<ChaCha8Rng> = (next..next + chunk)
            .map(|i| attempt_rng(cfg.seed, i as u64))
            .collect();
        let z = draw_latents(&mut rngs, params.w_mu.ncols());
        let rows = decode_rows(params, &z, &mut rngs, cfg);
        for ((tokens, eos), rng) in rows.into_iter().zip(rngs.iter_mut()) {
            report.attempts += 1;
            match finish(&tokens, eos, vocab, library, cfg.lfm_enabled, rng) {
                Attempt::Accepted { smiles, fragments } => {
                    report.molecules.push(smiles);
                    report.sequences.push(fragments);
                }
                Attempt::RejectedStructure { .. } => report.rejected_structure += 1,
                Attempt::RejectedLength => report.rejected_length += 1,
            }
            if report.molecules.len() == cfg.count {
                break;
            }
        }
        next += chunk;
    }
    report.incomplete = report.molecules.len() < cfg.count;
    Ok(report)
}
