//! Skip-gram fragment embeddings trained with negative sampling.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::Vocabulary;

const HEADER: &str = "fraggen-emb v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkipGramError {
    #[error("invalid skip-gram config: {0}")]
    Config(String),
    #[error("corpus yields no context pairs")]
    NoPairs,
    #[error("token id {0} outside vocabulary of size {1}")]
    BadId(u32, usize),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 64,
            window: 2,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<(), SkipGramError> {
        let bad = |m: &str| Err(SkipGramError::Config(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    pub target: Array2<f64>,
    pub context: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn vocab_size(&self) -> usize {
        self.target.nrows()
    }

    pub fn dim(&self) -> usize {
        self.target.ncols()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.target
            .rows()
            .into_iter()
            .chain(self.context.rows())
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0, f64::max)
    }

    /// Target vectors only; context vectors are not persisted.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER} {} {}\n", self.vocab_size(), self.dim());
        for (id, row) in self.target.rows().into_iter().enumerate() {
            let _ = write!(out, "{id}");
            for x in row {
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Reads target vectors; the context matrix comes back zeroed.
    pub fn from_text(text: &str) -> Result<Self, SkipGramError> {
        let err = |line: usize, message: &str| SkipGramError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let dims: Vec<usize> = header
            .strip_prefix(HEADER)
            .ok_or_else(|| err(1, "bad header"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| err(1, "bad dimensions")))
            .collect::<Result<_, _>>()?;
        let [v, d] = dims[..] else {
            return Err(err(1, "header needs |V| and d"));
        };
        if d == 0 || v.checked_mul(d).is_none_or(|n| n > 1 << 28) {
            return Err(err(1, "unreasonable dimensions"));
        }
        let mut target = Array2::zeros((v, d));
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            if rows == v {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(err(n, "more rows than declared"));
            }
            let mut fields = line.split_whitespace();
            let id: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(n, "bad id"))?;
            if id != rows {
                return Err(err(n, "ids must be dense and ascending"));
            }
            let mut count = 0;
            for (j, f) in fields.enumerate() {
                if j >= d {
                    return Err(err(n, "too many values"));
                }
                let x: f64 = f.parse().map_err(|_| err(n, "bad float"))?;
                if !x.is_finite() {
                    return Err(err(n, "non-finite value"));
                }
                target[[rows, j]] = x;
                count += 1;
            }
            if count != d {
                return Err(err(n, "too few values"));
            }
            rows += 1;
        }
        if rows != v {
            return Err(err(0, "fewer rows than declared"));
        }
        Ok(EmbeddingMatrix {
            context: Array2::zeros((v, d)),
            target,
        })
    }
}

/// Ordered (target, context) pairs within `window`, with specials dropped first.
pub fn context_pairs(seq: &[u32], window: usize) -> Vec<(u32, u32)> {
    let toks: Vec<u32> = seq
        .iter()
        .copied()
        .filter(|&t| !Vocabulary::is_special(t))
        .collect();
    let mut out = Vec::new();
    for i in 0..toks.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(toks.len() - 1);
        for j in lo..=hi {
            if j != i {
                out.push((toks[i], toks[j]));
            }
        }
    }
    out
}

fn log_sigmoid(x: f64) -> f64 {
    // log σ(x) = -log(1 + e^{-x}), written to stay finite for large |x|.
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log σ(t·c) - Σ log σ(-t·n)`.
pub fn pair_loss(
    target: ArrayView1<f64>,
    context: ArrayView1<f64>,
    negatives: &[ArrayView1<f64>],
) -> f64 {
    -log_sigmoid(target.dot(&context))
        - negatives
            .iter()
            .map(|n| log_sigmoid(-target.dot(n)))
            .sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Loss and its gradient with respect to every vector involved.
pub fn pair_loss_grad(t: &[f64], c: &[f64], negs: &[&[f64]]) -> PairGradient {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let tc = dot(t, c);
    let g_pos = sigmoid(tc) - 1.0;
    let mut loss = -log_sigmoid(tc);
    let mut dt: Vec<f64> = c.iter().map(|x| g_pos * x).collect();
    let dc: Vec<f64> = t.iter().map(|x| g_pos * x).collect();
    let mut dn = Vec::with_capacity(negs.len());
    for n in negs {
        let tn = dot(t, n);
        loss -= log_sigmoid(-tn);
        let g = sigmoid(tn);
        for (d, x) in dt.iter_mut().zip(n.iter()) {
            *d += g * x;
        }
        dn.push(t.iter().map(|x| g * x).collect());
    }
    PairGradient {
        loss,
        target: dt,
        context: dc,
        negatives: dn,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkipGramRun {
    pub embeddings: EmbeddingMatrix,
    /// Mean pair loss per epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// SGD over shuffled pairs with a linearly decaying step.
pub fn train_skipgram(
    corpus: &[Vec<u32>],
    vocab_size: usize,
    cfg: &SkipGramConfig,
) -> Result<SkipGramRun, SkipGramError> {
    cfg.validate()?;
    let mut pairs = Vec::new();
    let mut counts = vec![0u64; vocab_size];
    for seq in corpus {
        for &t in seq {
            if t as usize >= vocab_size {
                return Err(SkipGramError::BadId(t, vocab_size));
            }
            if !Vocabulary::is_special(t) {
                counts[t as usize] += 1;
            }
        }
        pairs.extend(context_pairs(seq, cfg.window));
    }
    if pairs.is_empty() {
        return Err(SkipGramError::NoPairs);
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|_| SkipGramError::NoPairs)?;

    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = 0.5 / d as f64;
    let target = Array2::from_shape_simple_fn((vocab_size, d), || rng.random_range(-half..half));
    let mut emb = EmbeddingMatrix {
        target,
        context: Array2::zeros((vocab_size, d)),
    };

    let total_steps = (pairs.len() * cfg.epochs) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut neg_ids = Vec::with_capacity(cfg.negatives);
    let mut t_buf = vec![0.0; d];
    for _ in 0..cfg.epochs {
        pairs.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &(t, c) in &pairs {
            let lr = cfg.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
            step += 1;
            neg_ids.clear();
            for _ in 0..cfg.negatives {
                let n = noise.sample(&mut rng) as u32;
                if n != c {
                    neg_ids.push(n);
                }
            }
            t_buf.copy_from_slice(emb.target.row(t as usize).as_slice().unwrap());
            let c_row = emb.context.row(c as usize).to_vec();
            let n_rows: Vec<Vec<f64>> = neg_ids
                .iter()
                .map(|&n| emb.context.row(n as usize).to_vec())
                .collect();
            let n_refs: Vec<&[f64]> = n_rows.iter().map(Vec::as_slice).collect();
            let g = pair_loss_grad(&t_buf, &c_row, &n_refs);
            loss_sum += g.loss;
            emb.target
                .row_mut(t as usize)
                .scaled_add(-lr, &ArrayView1::from(&g.target));
            emb.context
                .row_mut(c as usize)
                .scaled_add(-lr, &ArrayView1::from(&g.context));
            for (&n, dn) in neg_ids.iter().zip(&g.negatives) {
                emb.context
                    .row_mut(n as usize)
                    .scaled_add(-lr, &ArrayView1::from(dn));
            }
        }
        epoch_losses.push(loss_sum / pairs.len() as f64);
    }
    Ok(SkipGramRun {
        embeddings: emb,
        epoch_losses,
    })
}
