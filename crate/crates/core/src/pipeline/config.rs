use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::sampler::SampleConfig;
use crate::seqmodel::TrainConfig;
use crate::skipgram::SkipGramConfig;

/// Every knob of the pipeline. Defaults follow the published setup:
/// k = 10, 64-wide embeddings, 2 × 128 GRU units, latent 100, batch 128,
/// Adam at 1e-5 decayed by 0.9 per epoch, dropout 0.3, 4 epochs, 20k samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// SMILES input, one molecule per line.
    pub corpus: Option<PathBuf>,
    pub workdir: PathBuf,
    /// Copied into the skip-gram, training and sampling seeds by [`PipelineConfig::resolved`].
    pub seed: u64,
    /// Fragments seen fewer than `k` times are masked.
    pub k: u64,
    /// `false` trains and samples without masking (`k` forced to 0).
    pub lfm: bool,
    /// Also run the unmasked variant under `<workdir>/nolfm`, sharing preprocessing.
    pub ablation: bool,
    pub min_fragment_atoms: usize,
    /// Use only the first N input lines.
    pub max_molecules: Option<usize>,
    pub skipgram: SkipGramConfig,
    pub train: TrainConfig,
    pub sample: SampleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            workdir: PathBuf::from("work"),
            seed: 0,
            k: 10,
            lfm: true,
            ablation: false,
            min_fragment_atoms: 3,
            max_molecules: None,
            skipgram: SkipGramConfig::default(),
            train: TrainConfig::default(),
            sample: SampleConfig::default(),
        }
    }
}

/// Command-line overrides; `None` leaves the file value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k: Option<u64>,
    pub epochs: Option<usize>,
    pub sample_count: Option<usize>,
    pub no_lfm: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(c) = &o.corpus {
            self.corpus = Some(c.clone());
        }
        if let Some(w) = &o.workdir {
            self.workdir = w.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(e) = o.epochs {
            self.train.max_epochs = e;
        }
        if let Some(n) = o.sample_count {
            self.sample.count = n;
        }
        if o.no_lfm {
            self.lfm = false;
        }
        self
    }

    /// The effective configuration: the top-level seed propagated, masking off when `lfm` is false.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.skipgram.seed = c.seed;
        c.train.seed = c.seed;
        c.sample.seed = c.seed;
        if !c.lfm {
            c.k = 0;
        }
        c.sample.lfm_enabled = c.lfm;
        c
    }

    pub fn validate(&self) -> Result<(), String> {
        self.skipgram.validate().map_err(|e| e.to_string())?;
        self.train.validate().map_err(|e| e.to_string())?;
        self.sample.validate().map_err(|e| e.to_string())?;
        if self.min_fragment_atoms == 0 {
            return Err("min_fragment_atoms must be >= 1".into());
        }
        if self.train.epoch_sample_size == 0 {
            return Err("train.epoch_sample_size must be >= 1".into());
        }
        if self.skipgram.dim == 0 {
            return Err("skipgram.dim must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_hyperparameters() {
        let c = PipelineConfig::default();
        assert_eq!(c.k, 10);
        assert_eq!(c.skipgram.dim, 64);
        assert_eq!(
            (c.train.hidden, c.train.latent, c.train.layers),
            (128, 100, 2)
        );
        assert_eq!(c.train.batch_size, 128);
        assert_eq!(c.train.learning_rate, 1e-5);
        assert_eq!(c.train.lr_decay, 0.9);
        assert_eq!(c.train.dropout, 0.3);
        assert_eq!(c.train.max_epochs, 4);
        assert_eq!(c.train.epoch_sample_size, 1000);
        assert_eq!(c.sample.count, 20_000);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = PipelineConfig::from_toml("seed = 7\n[train]\nmax_epochs = 2\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.train.max_epochs, 2);
        assert_eq!(partial.train.batch_size, 128);
        assert!(PipelineConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn overrides_and_resolution() {
        let o = Overrides {
            seed: Some(5),
            epochs: Some(1),
            sample_count: Some(10),
            no_lfm: true,
            ..Default::default()
        };
        let c = PipelineConfig::default().apply(&o).resolved();
        assert_eq!((c.skipgram.seed, c.train.seed, c.sample.seed), (5, 5, 5));
        assert_eq!(c.k, 0);
        assert!(!c.sample.lfm_enabled);
        assert_eq!(c.train.max_epochs, 1);
        assert_eq!(c.sample.count, 10);
    }
}
