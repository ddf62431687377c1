use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[synth]
n_projects = 2
warnings_per_project = 30
[preprocess]
l_slice = 48
l_stmt = 12
[embedding]
dim = 6
epochs = 1
[model]
hidden = 5
dense_sizes = [8, 2]
[training]
epochs = 1
batch_size = 16
[split]
folds = 2
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("tiny.toml");
    if !cfg.exists() {
        fs::write(&cfg, TINY).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_warnrank"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .env_remove("WARNRANK_CACHE_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn help_mentions_cache_variable_and_exit_codes() {
    let o = Command::new(env!("CARGO_BIN_EXE_warnrank")).arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("WARNRANK_CACHE_DIR"));
    for sub in ["slice", "synth", "prepare", "train-embed", "train", "rank", "eval", "ablate"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn train_then_rank_writes_only_under_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["--output-dir", out.to_str().unwrap(), "train"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["vocab.json", "embedding.bin", "model.ckpt", "train.json", "train.manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("cache").is_dir());

    let ranked = tmp.path().join("ranked");
    let o = run(tmp.path(), &["--output-dir", ranked.to_str().unwrap(), "rank", "--model-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(ranked.join("ranked.json").is_file());

    let mut top: Vec<String> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    top.sort();
    assert_eq!(top, ["out", "ranked", "tiny.toml"]);
}

#[test]
fn cache_dir_follows_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("shared-cache");
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("tiny.toml");
    fs::write(&cfg, TINY).unwrap();
    let prepare = || {
        Command::new(env!("CARGO_BIN_EXE_warnrank"))
            .args(["--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "prepare"])
            .env("WARNRANK_CACHE_DIR", &cache)
            .env("RUST_LOG", "info")
            .output()
            .unwrap()
    };
    let first = prepare();
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(fs::read_dir(&cache).unwrap().count() >= 1);
    assert!(!out.join("cache").exists());
    let second = prepare();
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
}

#[test]
fn slice_prints_context_and_rejects_unknown_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(tmp.path(), &["--output-dir", out.to_str().unwrap(), "synth"]);
    assert_eq!(code(&o), 0);
    let corpus = out.join("corpus");
    let first = fs::read_to_string(corpus.join("warnings.jsonl")).unwrap();
    let w: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    let file = w["file"].as_str().unwrap();

    let base = ["--output-dir", out.to_str().unwrap(), "--corpus-dir", corpus.to_str().unwrap(), "slice", "--file"];
    let line = w["line"].to_string();
    let o = run(tmp.path(), &[&base[..], &[file, "--line", &line]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!o.stdout.is_empty());

    let o = run(tmp.path(), &[&base[..], &[file, "--line", "100000"]].concat());
    assert_eq!(code(&o), 2);
}

#[test]
fn user_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(code(&run(tmp.path(), &["--output-dir", out, "--folds", "1", "eval"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--output-dir", out, "frobnicate"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--output-dir", out, "--mode", "sideways", "prepare"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--output-dir", out, "rank", "--model-dir", "/nonexistent"])), 2);

    let missing = Command::new(env!("CARGO_BIN_EXE_warnrank"))
        .args(["--config", "/nonexistent.toml", "--output-dir", out, "synth"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 2);
}

#[test]
fn eval_refuses_unlabeled_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&run(tmp.path(), &["--output-dir", out.to_str().unwrap(), "synth"])), 0);
    let corpus = out.join("corpus");
    let unlabeled: String = fs::read_to_string(corpus.join("warnings.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut w: serde_json::Value = serde_json::from_str(l).unwrap();
            w["label"] = serde_json::Value::Null;
            w.to_string() + "\n"
        })
        .collect();
    let wpath = tmp.path().join("unlabeled.jsonl");
    fs::write(&wpath, unlabeled).unwrap();
    let o = run(
        tmp.path(),
        &["--output-dir", out.to_str().unwrap(), "--corpus-dir", corpus.to_str().unwrap(), "--warnings", wpath.to_str().unwrap(), "eval"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("label"));
}
