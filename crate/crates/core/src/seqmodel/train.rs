use log::info;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::{check_sequence, loss_and_grad, Dropout};
use super::params::ModelParameters;
use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub latent: usize,
    pub layers: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    /// Molecules sampled after each epoch for the stopping rule.
    pub epoch_sample_size: usize,
    pub freeze_embeddings: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 128,
            latent: 100,
            layers: 2,
            batch_size: 128,
            learning_rate: 1e-5,
            lr_decay: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            dropout: 0.3,
            max_epochs: 4,
            epoch_sample_size: 1000,
            freeze_embeddings: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.hidden == 0 || self.latent == 0 || self.layers == 0 {
            return bad("hidden, latent and layers must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) || !positive(self.lr_decay) {
            return bad("learning_rate and lr_decay must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || !positive(self.adam_eps)
        {
            return bad("Adam betas must be in [0, 1) and eps positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub valid: f64,
    pub novel: f64,
    pub unique: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Per-sequence means over the epoch.
    pub mean_loss: f64,
    pub mean_kl: f64,
    pub mean_nll: f64,
    pub metrics: Option<EpochMetrics>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    pub log: Vec<EpochRecord>,
    /// 1-based epoch whose parameters are returned.
    pub kept_epoch: usize,
    pub stopped_early: bool,
}

/// Minibatch Adam on `Σ (KL + NLL) / B`. After each epoch `on_epoch` may
/// report sample metrics; training stops when uniqueness falls below the
/// previous epoch's, and the previous epoch's parameters are returned.
pub fn train<F>(
    corpus: &[Vec<u32>],
    init: ModelParameters,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome, ModelError>
where
    F: FnMut(usize, &ModelParameters) -> Result<Option<EpochMetrics>, String>,
{
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    for seq in corpus {
        check_sequence(&init, seq)?;
    }
    let latent = init.w_mu.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init;
    let mut adam = Adam::new(&params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut log = Vec::new();
    let mut previous: Option<(ModelParameters, f64)> = None;
    for epoch in 1..=cfg.max_epochs {
        let lr = cfg.learning_rate * cfg.lr_decay.powi(epoch as i32 - 1);
        order.shuffle(&mut rng);
        let (mut kl, mut nll) = (0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[u32]> = chunk.iter().map(|&i| corpus[i].as_slice()).collect();
            let eps = Array2::from_shape_simple_fn((batch.len(), latent), || {
                rand::Rng::sample(&mut rng, StandardNormal)
            });
            let mut drop = Dropout::On {
                rate: cfg.dropout,
                rng: &mut rng,
            };
            let (loss, mut grads) = loss_and_grad(&params, &batch, eps.view(), &mut drop)?;
            kl += loss.kl;
            nll += loss.nll;
            grads.scale(1.0 / batch.len() as f64);
            if cfg.freeze_embeddings {
                grads.embedding.fill(0.0);
            }
            adam.step(&mut params, &grads, lr);
        }
        if !params.all_finite() {
            return Err(ModelError::NonFinite(f64::NAN));
        }
        let n = corpus.len() as f64;
        let metrics = on_epoch(epoch, &params).map_err(ModelError::Callback)?;
        let record = EpochRecord {
            epoch,
            learning_rate: lr,
            mean_loss: (kl + nll) / n,
            mean_kl: kl / n,
            mean_nll: nll / n,
            metrics,
        };
        info!(
            "epoch {epoch}: loss {:.4} (kl {:.4}, nll {:.4}) metrics {:?}",
            record.mean_loss, record.mean_kl, record.mean_nll, record.metrics
        );
        log.push(record);
        if let Some(m) = metrics {
            if let Some((prev_params, prev_unique)) = previous.take() {
                if m.unique < prev_unique {
                    info!(
                        "uniqueness dropped ({prev_unique:.4} -> {:.4}); keeping epoch {}",
                        m.unique,
                        epoch - 1
                    );
                    return Ok(TrainOutcome {
                        params: prev_params,
                        log,
                        kept_epoch: epoch - 1,
                        stopped_early: true,
                    });
                }
            }
            if epoch < cfg.max_epochs {
                previous = Some((params.clone(), m.unique));
            }
        }
    }
    Ok(TrainOutcome {
        params,
        kept_epoch: cfg.max_epochs,
        log,
        stopped_early: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::ModelDims;
    use crate::vocab::{EOS, SOS};

    fn setup() -> (Vec<Vec<u32>>, ModelParameters) {
        let corpus: Vec<Vec<u32>> = (0..40)
            .map(|i| vec![SOS, 3 + (i % 3) as u32, 4 + (i % 2) as u32, EOS])
            .collect();
        let dims = ModelDims {
            vocab_size: 6,
            embed_dim: 4,
            hidden: 5,
            latent: 3,
            layers: 2,
        };
        let p = ModelParameters::init(dims, None, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        (corpus, p)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            learning_rate: 1e-2,
            max_epochs: 3,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_log() {
        let (c, p) = setup();
        let a = train(&c, p.clone(), &cfg(), |_, _| Ok(None)).unwrap();
        let b = train(&c, p, &cfg(), |_, _| Ok(None)).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn uniqueness_drop_returns_previous_epoch() {
        let (c, p) = setup();
        let mut snapshots = Vec::new();
        let uniques = [0.5, 0.7, 0.6];
        let out = train(&c, p, &cfg(), |e, params| {
            snapshots.push(params.clone());
            Ok(Some(EpochMetrics {
                valid: 1.0,
                novel: 1.0,
                unique: uniques[e - 1],
            }))
        })
        .unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.kept_epoch, 2);
        assert_eq!(out.log.len(), 3);
        assert_eq!(out.params, snapshots[1]);
    }

    #[test]
    fn frozen_embeddings_stay_put() {
        let (c, p) = setup();
        let frozen = TrainConfig {
            freeze_embeddings: true,
            ..cfg()
        };
        let out = train(&c, p.clone(), &frozen, |_, _| Ok(None)).unwrap();
        assert_eq!(out.params.embedding, p.embedding);
        assert_ne!(out.params.w_out, p.w_out);
    }

    #[test]
    fn callback_errors_propagate() {
        let (c, p) = setup();
        let err = train(&c, p, &cfg(), |_, _| Err("disk full".into())).unwrap_err();
        assert_eq!(err, ModelError::Callback("disk full".into()));
    }

    #[test]
    fn bad_config_rejected() {
        let (c, p) = setup();
        let bad = TrainConfig {
            dropout: 1.0,
            ..cfg()
        };
        assert!(matches!(
            train(&c, p, &bad, |_, _| Ok(None)),
            Err(ModelError::Config(_))
        ));
    }
}
