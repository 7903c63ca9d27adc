use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fraggen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraggen"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn corpus() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/zinc_clean_leads_50k.smi")
        .display()
        .to_string()
}

const SMALL: &str = r#"
seed = 5
k = 3
max_molecules = 200

[skipgram]
dim = 16
epochs = 1

[train]
hidden = 16
latent = 8
batch_size = 32
learning_rate = 1e-3
max_epochs = 1
epoch_sample_size = 10

[sample]
count = 20
"#;

#[test]
fn stages_one_by_one_fill_the_workdir() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let c = corpus();
    let global = ["--config", "small.toml", "--workdir", "w"];
    let run = |args: &[&str]| {
        let all: Vec<&str> = args.iter().chain(&global).copied().collect();
        let o = fraggen(dir.path(), &all);
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        o
    };
    let o = run(&["preprocess", &c]);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("kept"));
    for stage in ["vocab", "embed", "train", "sample", "eval", "stats"] {
        run(&[stage]);
    }
    let w = dir.path().join("w");
    for f in [
        "fragments.txt",
        "preprocess.toml",
        "vocab.txt",
        "embeddings.txt",
        "model.ckpt",
        "epochs/epoch-1.ckpt",
        "train_log.toml",
        "samples.smi",
        "samples.meta.toml",
        "metrics.toml",
        "distribution.csv",
        "stats.toml",
        "train.manifest.toml",
    ] {
        assert!(w.join(f).is_file(), "{f} missing");
    }
    let samples = fs::read_to_string(w.join("samples.smi")).unwrap();
    assert!(samples.lines().count() <= 20);
    let manifest = fs::read_to_string(w.join("vocab.manifest.toml")).unwrap();
    assert!(manifest.contains("k = 3"));

    // Quiet mode stays silent on success.
    let o = fraggen(
        dir.path(),
        &["-q", "stats", "--config", "small.toml", "--workdir", "w"],
    );
    assert_eq!(code(&o), 0);
    assert!(o.stderr.is_empty());
}

#[test]
fn pipeline_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let c = corpus();
    let args = [
        "pipeline",
        &c,
        "--config",
        "small.toml",
        "--workdir",
        "w",
        "--seed",
        "9",
        "--k",
        "4",
        "--epochs",
        "1",
        "--sample-count",
        "12",
        "--no-lfm",
    ];
    let o = fraggen(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let effective = fs::read_to_string(dir.path().join("w/config.toml")).unwrap();
    assert!(effective.contains("seed = 9"));
    assert!(effective.contains("lfm = false"));
    assert!(effective.contains("count = 12"));
    let vocab = fs::read_to_string(dir.path().join("w/vocab.txt")).unwrap();
    assert!(!vocab
        .lines()
        .any(|l| l.split('\t').next().unwrap().contains('_')));

    // Second run: nothing to do, same samples.
    let before = fs::read(dir.path().join("w/samples.smi")).unwrap();
    let o = fraggen(dir.path(), &args);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stages run: none"));
    assert_eq!(fs::read(dir.path().join("w/samples.smi")).unwrap(), before);
}

#[test]
fn fragment_writes_one_record_per_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("in.smi"),
        "CC(=O)Oc1ccccc1C(=O)O\nCCO\nC1CC\n",
    )
    .unwrap();
    let o = fraggen(dir.path(), &["fragment", "in.smi", "-o", "out.txt"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("out.txt")).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
}

#[test]
fn failure_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Bad config file.
    fs::write(d.join("bad.toml"), "nonsense_key = 1\n").unwrap();
    assert_eq!(code(&fraggen(d, &["--config", "bad.toml", "vocab"])), 3);
    assert_eq!(code(&fraggen(d, &["--config", "absent.toml", "vocab"])), 3);
    // No corpus given.
    assert_eq!(code(&fraggen(d, &["preprocess", "--workdir", "w"])), 3);
    // Unreadable corpus.
    assert_eq!(
        code(&fraggen(
            d,
            &["preprocess", "missing.smi", "--workdir", "w"]
        )),
        4
    );
    // Missing upstream artifact.
    assert_eq!(code(&fraggen(d, &["vocab", "--workdir", "w"])), 4);
    // Nothing survives preprocessing.
    fs::write(d.join("junk.smi"), "C1CC\nxyz\n").unwrap();
    let o = fraggen(d, &["preprocess", "junk.smi", "--workdir", "w"]);
    assert_eq!(code(&o), 6);
    assert!(String::from_utf8_lossy(&o.stderr).contains("preprocess"));
    // A damaged vocabulary file.
    fs::create_dir_all(d.join("v")).unwrap();
    fs::write(d.join("v/fragments.txt"), "not a fragment file\n").unwrap();
    assert_eq!(code(&fraggen(d, &["vocab", "--workdir", "v"])), 5);
    // Usage errors come from the argument parser.
    assert_eq!(code(&fraggen(d, &["frobnicate"])), 2);
}
