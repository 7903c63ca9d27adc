use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use fraggen_chem::FragmentOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use super::corpus::{kept, read_fragment_file, read_smiles_lines, write_fragment_file};
use super::preprocess::{fragment_all, preprocess, Accounting};
use super::{PipelineError, Stage, StageError};
use crate::evalmetrics::{valid_canonical, DatasetStats, DistributionReport, MetricReport};
use crate::sampler::{
    sample_batch, sample_batch_with, FragmentLibrary, SampleConfig, SampleReport,
};
use crate::seqmodel::{
    train, Checkpoint, EpochMetrics, EpochRecord, ModelDims, ModelParameters, TrainOutcome,
};
use crate::skipgram::{train_skipgram, EmbeddingMatrix, SkipGramError, SkipGramRun};
use crate::vocab::{VocabError, Vocabulary};

/// Artifact locations. Nested work directories (the no-masking ablation)
/// point `fragments` at the parent's preprocessing output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workdir {
    pub root: PathBuf,
    pub fragments: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        Workdir {
            fragments: root.join("fragments.txt"),
            root,
        }
    }

    pub fn nested(parent: &Workdir, name: &str) -> Self {
        Workdir {
            root: parent.root.join(name),
            fragments: parent.fragments.clone(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn accounting(&self) -> PathBuf {
        self.path("preprocess.toml")
    }
    pub fn vocab(&self) -> PathBuf {
        self.path("vocab.txt")
    }
    pub fn embeddings(&self) -> PathBuf {
        self.path("embeddings.txt")
    }
    pub fn embed_log(&self) -> PathBuf {
        self.path("embed_log.toml")
    }
    pub fn model(&self) -> PathBuf {
        self.path("model.ckpt")
    }
    pub fn epoch_checkpoint(&self, epoch: usize) -> PathBuf {
        self.path(&format!("epochs/epoch-{epoch}.ckpt"))
    }
    pub fn train_log(&self) -> PathBuf {
        self.path("train_log.toml")
    }
    pub fn samples(&self) -> PathBuf {
        self.path("samples.smi")
    }
    pub fn sample_meta(&self) -> PathBuf {
        self.path("samples.meta.toml")
    }
    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.toml")
    }
    pub fn distribution_csv(&self) -> PathBuf {
        self.path("distribution.csv")
    }
    pub fn distribution_summary(&self) -> PathBuf {
        self.path("distribution.txt")
    }
    pub fn stats(&self) -> PathBuf {
        self.path("stats.toml")
    }
    pub fn config(&self) -> PathBuf {
        self.path("config.toml")
    }
    pub fn manifest(&self, stage: Stage) -> PathBuf {
        self.path(&format!("{stage}.manifest.toml"))
    }
}

/// Written after a stage succeeds: what it read, what it wrote, and the
/// effective configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    /// The configuration keys this stage depends on.
    pub settings: String,
    /// Path to SHA-256, hex.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub config: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub kept_epoch: usize,
    pub stopped_early: bool,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub accepted: usize,
    pub attempts: usize,
    pub rejected_structure: usize,
    pub rejected_length: usize,
    pub incomplete: bool,
    pub checkpoint_sha256: String,
    pub vocab_sha256: String,
    pub config: SampleConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSummary {
    /// Each stage with whether it ran (`false`: artifacts were current).
    pub stages: Vec<(Stage, bool)>,
    pub metrics: MetricReport,
    /// Metrics of the no-masking run when ablation is on.
    pub ablation: Option<MetricReport>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, StageError> {
    fs::read(path).map_err(|e| StageError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, StageError> {
    fs::read_to_string(path).map_err(|e| StageError::io(path, e))
}

/// Sibling temp file, then rename: readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StageError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| StageError::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        StageError::io(path, e)
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_files(paths: &[PathBuf]) -> Result<BTreeMap<String, String>, StageError> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_hex(&read_bytes(p)?))))
        .collect()
}

fn settings(stage: Stage, cfg: &PipelineConfig) -> String {
    match stage {
        Stage::Preprocess | Stage::Fragment => format!(
            "min_fragment_atoms = {}\nmax_molecules = {:?}\n",
            cfg.min_fragment_atoms, cfg.max_molecules
        ),
        Stage::Vocab | Stage::Stats => format!("k = {}\n", cfg.k),
        Stage::Embed => ser(&cfg.skipgram),
        // Per-epoch sampling uses the sampler settings, apart from the count.
        Stage::Train => format!(
            "{}sample = {:?}\n",
            ser(&cfg.train),
            (
                cfg.sample.max_len,
                cfg.sample.seed,
                cfg.sample.lfm_enabled,
                cfg.sample.temperature
            )
        ),
        Stage::Sample => ser(&cfg.sample),
        Stage::Eval => String::new(),
    }
}

fn ser<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("config serializes")
}

fn input_paths(
    stage: Stage,
    cfg: &PipelineConfig,
    wd: &Workdir,
) -> Result<Vec<PathBuf>, StageError> {
    Ok(match stage {
        Stage::Preprocess | Stage::Fragment => vec![cfg
            .corpus
            .clone()
            .ok_or_else(|| StageError::Config("no corpus file given".into()))?],
        Stage::Vocab | Stage::Stats => vec![wd.fragments.clone()],
        Stage::Embed => vec![wd.fragments.clone(), wd.vocab()],
        Stage::Train => vec![wd.fragments.clone(), wd.vocab(), wd.embeddings()],
        Stage::Sample => vec![wd.vocab(), wd.model()],
        Stage::Eval => vec![wd.fragments.clone(), wd.samples()],
    })
}

fn output_paths(stage: Stage, wd: &Workdir) -> Vec<PathBuf> {
    match stage {
        Stage::Preprocess => vec![wd.fragments.clone(), wd.accounting()],
        Stage::Fragment => vec![],
        Stage::Vocab => vec![wd.vocab()],
        Stage::Embed => vec![wd.embeddings(), wd.embed_log()],
        Stage::Train => vec![wd.model(), wd.train_log()],
        Stage::Sample => vec![wd.samples(), wd.sample_meta()],
        Stage::Eval => vec![
            wd.metrics(),
            wd.distribution_csv(),
            wd.distribution_summary(),
        ],
        Stage::Stats => vec![wd.stats()],
    }
}

/// True when the stage's manifest matches the current settings, inputs and outputs.
pub fn stage_is_fresh(stage: Stage, cfg: &PipelineConfig, wd: &Workdir) -> bool {
    let cfg = cfg.resolved();
    let Ok(text) = fs::read_to_string(wd.manifest(stage)) else {
        return false;
    };
    let Ok(m) = toml::from_str::<StageManifest>(&text) else {
        return false;
    };
    let current = |paths: Result<Vec<PathBuf>, StageError>| paths.and_then(|p| hash_files(&p)).ok();
    m.stage == stage.name()
        && m.settings == settings(stage, &cfg)
        && current(input_paths(stage, &cfg, wd)).as_ref() == Some(&m.inputs)
        && current(Ok(output_paths(stage, wd))).as_ref() == Some(&m.outputs)
}

/// Validates the config, runs `body`, then records the manifest.
fn execute<T>(
    stage: Stage,
    cfg: &PipelineConfig,
    wd: &Workdir,
    body: impl FnOnce(&PipelineConfig, &Workdir) -> Result<T, StageError>,
) -> Result<T, PipelineError> {
    let wrap = |source| PipelineError { stage, source };
    let cfg = cfg.resolved();
    cfg.validate().map_err(|m| wrap(StageError::Config(m)))?;
    let inputs = input_paths(stage, &cfg, wd)
        .and_then(|p| hash_files(&p))
        .map_err(wrap)?;
    log::info!("{stage}: running in {}", wd.root.display());
    let out = body(&cfg, wd).map_err(wrap)?;
    let manifest = StageManifest {
        stage: stage.name().to_string(),
        settings: settings(stage, &cfg),
        inputs,
        outputs: hash_files(&output_paths(stage, wd)).map_err(wrap)?,
        config: cfg,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    write_atomic(&wd.manifest(stage), text.as_bytes()).map_err(wrap)?;
    Ok(out)
}

fn load_training(wd: &Workdir) -> Result<(Vec<String>, Vec<Vec<String>>), StageError> {
    let records = read_fragment_file(&read_text(&wd.fragments)?)
        .map_err(|e| StageError::format(&wd.fragments, e))?;
    let (smiles, seqs) = kept(&records);
    if smiles.is_empty() {
        return Err(StageError::EmptyCorpus(format!(
            "{} has no kept molecules",
            wd.fragments.display()
        )));
    }
    Ok((smiles, seqs))
}

fn load_vocab(wd: &Workdir) -> Result<Vocabulary, StageError> {
    let path = wd.vocab();
    Vocabulary::from_text(&read_text(&path)?).map_err(|e| StageError::format(path, e))
}

fn encode_corpus(
    vocab: &Vocabulary,
    seqs: &[Vec<String>],
    wd: &Workdir,
) -> Result<Vec<Vec<u32>>, StageError> {
    seqs.iter()
        .map(|s| {
            vocab
                .encode(s)
                .map_err(|e| StageError::format(&wd.fragments, e))
        })
        .collect()
}

fn training_set(smiles: &[String]) -> HashSet<String> {
    valid_canonical(smiles).into_iter().collect()
}

pub fn run_preprocess(cfg: &PipelineConfig, wd: &Workdir) -> Result<Accounting, PipelineError> {
    execute(Stage::Preprocess, cfg, wd, |cfg, wd| {
        let path = cfg.corpus.as_deref().expect("checked by input_paths");
        let mut smiles = read_smiles_lines(&read_text(path)?);
        if let Some(n) = cfg.max_molecules {
            smiles.truncate(n);
        }
        if smiles.is_empty() {
            return Err(StageError::EmptyCorpus(format!(
                "{} has no SMILES",
                path.display()
            )));
        }
        let opts = FragmentOptions {
            min_fragment_atoms: cfg.min_fragment_atoms,
        };
        let p = preprocess(&smiles, &opts);
        log::info!(
            "preprocess: {} in, {} kept",
            p.accounting.input,
            p.accounting.kept
        );
        write_atomic(&wd.fragments, write_fragment_file(&p.records).as_bytes())?;
        write_atomic(&wd.accounting(), p.accounting.to_text().as_bytes())?;
        if p.accounting.kept == 0 {
            return Err(StageError::EmptyCorpus(
                "no molecule survived preprocessing".into(),
            ));
        }
        Ok(p.accounting)
    })
}

/// Fragments every molecule of `input` without filtering.
pub fn fragment_file(
    input: &Path,
    output: &Path,
    min_fragment_atoms: usize,
) -> Result<usize, PipelineError> {
    let wrap = |source| PipelineError {
        stage: Stage::Fragment,
        source,
    };
    if min_fragment_atoms == 0 {
        return Err(wrap(StageError::Config(
            "min_fragment_atoms must be >= 1".into(),
        )));
    }
    let smiles = read_smiles_lines(&read_text(input).map_err(wrap)?);
    let records = fragment_all(&smiles, &FragmentOptions { min_fragment_atoms });
    write_atomic(output, write_fragment_file(&records).as_bytes()).map_err(wrap)?;
    Ok(records.len())
}

pub fn run_vocab(cfg: &PipelineConfig, wd: &Workdir) -> Result<Vocabulary, PipelineError> {
    execute(Stage::Vocab, cfg, wd, |cfg, wd| {
        let (_, seqs) = load_training(wd)?;
        let vocab = Vocabulary::build(&seqs, cfg.k).map_err(|e| match e {
            VocabError::EmptyCorpus => StageError::EmptyCorpus(e.to_string()),
            e => StageError::format(&wd.fragments, e),
        })?;
        log::info!("vocab: {} tokens at k = {}", vocab.len(), cfg.k);
        write_atomic(&wd.vocab(), vocab.to_text().as_bytes())?;
        Ok(vocab)
    })
}

pub fn run_embed(cfg: &PipelineConfig, wd: &Workdir) -> Result<SkipGramRun, PipelineError> {
    execute(Stage::Embed, cfg, wd, |cfg, wd| {
        let vocab = load_vocab(wd)?;
        let (_, seqs) = load_training(wd)?;
        let ids = encode_corpus(&vocab, &seqs, wd)?;
        let run = train_skipgram(&ids, vocab.len(), &cfg.skipgram).map_err(|e| match e {
            SkipGramError::Config(m) => StageError::Config(m),
            SkipGramError::NoPairs => StageError::EmptyCorpus(e.to_string()),
            e => StageError::format(wd.vocab(), e),
        })?;
        log::info!("embed: epoch losses {:?}", run.epoch_losses);
        write_atomic(&wd.embeddings(), run.embeddings.to_text().as_bytes())?;
        let log = toml::to_string(&BTreeMap::from([("epoch_losses", &run.epoch_losses)]))
            .expect("log serializes");
        write_atomic(&wd.embed_log(), log.as_bytes())?;
        Ok(run)
    })
}

fn epoch_metrics(report: &SampleReport, training: &HashSet<String>) -> EpochMetrics {
    match MetricReport::compute(&report.molecules, training) {
        Ok(m) => EpochMetrics {
            valid: m.valid,
            novel: m.novel,
            unique: m.unique,
        },
        // Nothing accepted: every rate is reported as zero.
        Err(_) => EpochMetrics {
            valid: 0.0,
            novel: 0.0,
            unique: 0.0,
        },
    }
}

pub fn run_train(cfg: &PipelineConfig, wd: &Workdir) -> Result<TrainOutcome, PipelineError> {
    execute(Stage::Train, cfg, wd, |cfg, wd| {
        let vocab = load_vocab(wd)?;
        let (smiles, seqs) = load_training(wd)?;
        let ids = encode_corpus(&vocab, &seqs, wd)?;
        let emb_path = wd.embeddings();
        let emb = EmbeddingMatrix::from_text(&read_text(&emb_path)?)
            .map_err(|e| StageError::format(&emb_path, e))?;
        if emb.vocab_size() != vocab.len() {
            return Err(StageError::format(
                &emb_path,
                format!(
                    "{} rows for a vocabulary of {}",
                    emb.vocab_size(),
                    vocab.len()
                ),
            ));
        }
        let dims = ModelDims {
            vocab_size: vocab.len(),
            embed_dim: emb.dim(),
            hidden: cfg.train.hidden,
            latent: cfg.train.latent,
            layers: cfg.train.layers,
        };
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
        init_rng.set_stream(1);
        let init = ModelParameters::init(dims, Some(&emb.target), &mut init_rng)?;
        let library = FragmentLibrary::from_vocab(&vocab)?;
        let training = training_set(&smiles);
        let epoch_cfg = SampleConfig {
            count: cfg.train.epoch_sample_size,
            ..cfg.sample.clone()
        };
        let vocab_hash = vocab.content_hash();
        let checkpoint = |params: &ModelParameters| Checkpoint {
            params: params.clone(),
            config: cfg.train.clone(),
            vocab_hash,
        };
        let outcome = train(&ids, init, &cfg.train, |epoch, params| {
            write_atomic(&wd.epoch_checkpoint(epoch), &checkpoint(params).to_bytes())
                .map_err(|e| e.to_string())?;
            let report = sample_batch_with(params, &vocab, &library, &epoch_cfg)
                .map_err(|e| e.to_string())?;
            let m = epoch_metrics(&report, &training);
            log::info!(
                "train: epoch {epoch} valid {:.3} novel {:.3} unique {:.3} ({} of {} attempts accepted)",
                m.valid,
                m.novel,
                m.unique,
                report.molecules.len(),
                report.attempts
            );
            Ok(Some(m))
        })?;
        if outcome.stopped_early {
            log::info!(
                "train: uniqueness fell, keeping epoch {}",
                outcome.kept_epoch
            );
        }
        write_atomic(&wd.model(), &checkpoint(&outcome.params).to_bytes())?;
        let log = TrainLog {
            kept_epoch: outcome.kept_epoch,
            stopped_early: outcome.stopped_early,
            epochs: outcome.log.clone(),
        };
        write_atomic(
            &wd.train_log(),
            toml::to_string(&log).expect("log serializes").as_bytes(),
        )?;
        Ok(outcome)
    })
}

pub fn run_sample(cfg: &PipelineConfig, wd: &Workdir) -> Result<SampleReport, PipelineError> {
    execute(Stage::Sample, cfg, wd, |cfg, wd| {
        let vocab = load_vocab(wd)?;
        let model_path = wd.model();
        let bytes = read_bytes(&model_path)?;
        let ckpt =
            Checkpoint::from_bytes(&bytes).map_err(|e| StageError::format(&model_path, e))?;
        ckpt.check_vocab(&vocab.content_hash())
            .map_err(|e| StageError::format(&model_path, e))?;
        let report = sample_batch(&ckpt.params, &vocab, &cfg.sample)?;
        if report.incomplete {
            log::warn!(
                "sample: budget exhausted, {} of {} molecules",
                report.molecules.len(),
                cfg.sample.count
            );
        }
        let mut text = String::with_capacity(report.molecules.len() * 40);
        for m in &report.molecules {
            text.push_str(m);
            text.push('\n');
        }
        write_atomic(&wd.samples(), text.as_bytes())?;
        let meta = SampleMeta {
            seed: cfg.sample.seed,
            accepted: report.molecules.len(),
            attempts: report.attempts,
            rejected_structure: report.rejected_structure,
            rejected_length: report.rejected_length,
            incomplete: report.incomplete,
            checkpoint_sha256: sha256_hex(&bytes),
            vocab_sha256: hex::encode(vocab.content_hash()),
            config: cfg.sample.clone(),
        };
        write_atomic(
            &wd.sample_meta(),
            toml::to_string(&meta).expect("meta serializes").as_bytes(),
        )?;
        Ok(report)
    })
}

pub fn run_eval(cfg: &PipelineConfig, wd: &Workdir) -> Result<MetricReport, PipelineError> {
    execute(Stage::Eval, cfg, wd, |_, wd| {
        let (smiles, _) = load_training(wd)?;
        let samples = read_smiles_lines(&read_text(&wd.samples())?);
        let metrics = MetricReport::compute(&samples, &training_set(&smiles))?;
        let dist = DistributionReport::compute(&smiles, &samples)?;
        log::info!(
            "eval: valid {:.3} novel {:.3} unique {:.3}",
            metrics.valid,
            metrics.novel,
            metrics.unique
        );
        write_atomic(&wd.metrics(), metrics.to_text().as_bytes())?;
        write_atomic(&wd.distribution_csv(), dist.to_csv().as_bytes())?;
        write_atomic(&wd.distribution_summary(), dist.summary_text().as_bytes())?;
        Ok(metrics)
    })
}

pub fn run_stats(cfg: &PipelineConfig, wd: &Workdir) -> Result<DatasetStats, PipelineError> {
    execute(Stage::Stats, cfg, wd, |cfg, wd| {
        let records = read_fragment_file(&read_text(&wd.fragments)?)
            .map_err(|e| StageError::format(&wd.fragments, e))?;
        let (smiles, seqs) = kept(&records);
        let stats = DatasetStats::compute(records.len(), &smiles, &seqs, cfg.k);
        write_atomic(&wd.stats(), stats.to_text().as_bytes())?;
        Ok(stats)
    })
}

/// Runs one stage and discards its in-memory result.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, wd: &Workdir) -> Result<(), PipelineError> {
    match stage {
        Stage::Preprocess => run_preprocess(cfg, wd).map(drop),
        Stage::Fragment => {
            let input = cfg.corpus.clone().ok_or(PipelineError {
                stage,
                source: StageError::Config("no corpus file given".into()),
            })?;
            fragment_file(
                &input,
                &wd.path("fragments.all.txt"),
                cfg.min_fragment_atoms,
            )
            .map(drop)
        }
        Stage::Vocab => run_vocab(cfg, wd).map(drop),
        Stage::Embed => run_embed(cfg, wd).map(drop),
        Stage::Train => run_train(cfg, wd).map(drop),
        Stage::Sample => run_sample(cfg, wd).map(drop),
        Stage::Eval => run_eval(cfg, wd).map(drop),
        Stage::Stats => run_stats(cfg, wd).map(drop),
    }
}

fn run_stages(
    stages: &[Stage],
    cfg: &PipelineConfig,
    wd: &Workdir,
) -> Result<Vec<(Stage, bool)>, PipelineError> {
    let mut done = Vec::new();
    for &stage in stages {
        if stage_is_fresh(stage, cfg, wd) {
            log::info!("{stage}: artifacts current, skipped");
            done.push((stage, false));
        } else {
            run_stage(stage, cfg, wd)?;
            done.push((stage, true));
        }
    }
    Ok(done)
}

fn read_metrics(wd: &Workdir) -> Result<MetricReport, PipelineError> {
    let wrap = |source| PipelineError {
        stage: Stage::Eval,
        source,
    };
    let path = wd.metrics();
    let text = read_text(&path).map_err(wrap)?;
    toml::from_str(&text).map_err(|e| wrap(StageError::format(path, e)))
}

/// Every stage in order, skipping those whose artifacts are current. With
/// `ablation` the masking-off variant reruns vocab through eval under
/// `<workdir>/nolfm` on the same preprocessed corpus.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    let cfg = cfg.resolved();
    cfg.validate().map_err(|m| PipelineError {
        stage: Stage::Preprocess,
        source: StageError::Config(m),
    })?;
    let wd = Workdir::new(&cfg.workdir);
    write_atomic(&wd.config(), cfg.to_toml().as_bytes()).map_err(|source| PipelineError {
        stage: Stage::Preprocess,
        source,
    })?;
    let stages = run_stages(&Stage::PIPELINE, &cfg, &wd)?;
    let metrics = read_metrics(&wd)?;
    let ablation = if cfg.ablation {
        let off = PipelineConfig {
            lfm: false,
            ..cfg.clone()
        }
        .resolved();
        let sub = Workdir::nested(&wd, "nolfm");
        run_stages(
            &[
                Stage::Vocab,
                Stage::Embed,
                Stage::Train,
                Stage::Sample,
                Stage::Eval,
            ],
            &off,
            &sub,
        )?;
        Some(read_metrics(&sub)?)
    } else {
        None
    };
    Ok(PipelineSummary {
        stages,
        metrics,
        ablation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn missing_corpus_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            run_preprocess(&PipelineConfig::default(), &Workdir::new(dir.path())).unwrap_err();
        assert_eq!(err.stage, Stage::Preprocess);
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unreadable_and_empty_corpora() {
        let dir = tempfile::tempdir().unwrap();
        let wd = Workdir::new(dir.path());
        let mut cfg = PipelineConfig {
            corpus: Some(dir.path().join("absent.smi")),
            ..Default::default()
        };
        assert_eq!(run_preprocess(&cfg, &wd).unwrap_err().exit_code(), 4);
        let path = dir.path().join("small.smi");
        fs::write(&path, "CCO\nC1CC\n").unwrap();
        cfg.corpus = Some(path);
        let err = run_preprocess(&cfg, &wd).unwrap_err();
        assert_eq!(err.exit_code(), 6);
        // The accounting is still written for inspection.
        assert!(read_text(&wd.accounting()).unwrap().contains("input = 2"));
    }

    #[test]
    fn manifests_track_freshness() {
        let dir = tempfile::tempdir().unwrap();
        let wd = Workdir::new(dir.path());
        let corpus = dir.path().join("c.smi");
        fs::write(&corpus, "CC(=O)Oc1ccccc1C(=O)O\nCCCCOc1ccccc1C(=O)NCC\n").unwrap();
        let cfg = PipelineConfig {
            corpus: Some(corpus.clone()),
            ..Default::default()
        };
        assert!(!stage_is_fresh(Stage::Preprocess, &cfg, &wd));
        run_preprocess(&cfg, &wd).unwrap();
        assert!(stage_is_fresh(Stage::Preprocess, &cfg, &wd));
        let changed = PipelineConfig {
            max_molecules: Some(1),
            ..cfg.clone()
        };
        assert!(!stage_is_fresh(Stage::Preprocess, &changed, &wd));
        fs::write(&corpus, "CCO\n").unwrap();
        assert!(!stage_is_fresh(Stage::Preprocess, &cfg, &wd));
    }
}
