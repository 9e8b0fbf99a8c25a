use std::path::Path;
use std::process::{Command, Output};

fn clamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clamp")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/cif").join(name)).unwrap()
}

fn manifest(dir: &Path, rows: &[(&str, &str, &str)]) -> std::path::PathBuf {
    std::fs::create_dir_all(dir.join("cifs")).unwrap();
    let mut text = String::new();
    for (id, fixture_name, desc) in rows {
        std::fs::write(dir.join("cifs").join(fixture_name), fixture(fixture_name)).unwrap();
        text.push_str(&serde_json::json!({"id": id, "cif": format!("cifs/{fixture_name}"), "text": desc}).to_string());
        text.push('\n');
    }
    let p = dir.join("manifest.jsonl");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_exit_codes_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let good = manifest(&dir.path().join("good"), &[("a", "rocksalt.cif", "rock salt"), ("b", "minimal_p1.cif", "one atom")]);
    let out = clamp(&["validate", "--manifest", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], 2);

    let broken = manifest(&dir.path().join("broken"), &[("a", "rocksalt.cif", "rock salt"), ("bad", "degenerate_cell.cif", "flat")]);
    let path = dir.path().join("report.json");
    let out = clamp(&["validate", "--manifest", s(&broken), "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["issues"][0]["id"], "bad");
    assert_eq!(report["issues"][0]["status"], "degenerate-cell");

    let partial = manifest(&dir.path().join("partial"), &[("p", "partial_occupancy.cif", "half nickel")]);
    assert_eq!(clamp(&["validate", "--manifest", s(&partial)]).status.code(), Some(0));
    assert_eq!(clamp(&["validate", "--manifest", s(&partial), "--policy", "exclude-partial"]).status.code(), Some(2));

    assert_eq!(clamp(&["validate", "--manifest", s(&dir.path().join("missing.jsonl"))]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(clamp(&[]).status.code(), Some(1));
    assert_eq!(clamp(&["train"]).status.code(), Some(1));
    assert_eq!(clamp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(clamp(&["synth", "--out", "x", "--classes", "0"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"train": {"epoch": 3}}"#).unwrap();
    let out = clamp(&["train", "--config", s(&cfg), "--manifest", "m.jsonl", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epoch"));
    assert_eq!(clamp(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_classify_embed_eval() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = clamp(&["synth", "--out", s(&corpus), "--classes", "2", "--per-class", "12", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"model": {"d_v": 8, "conv_layers": 1, "d_m": 16, "text_layers": 1, "heads": 2, "d": 8},
            "train": {"batch_size": 4, "epochs": 1}, "data": {"manifest": "corpus/manifest.jsonl", "val_fraction": 0.3}}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let out = clamp(&["train", "--config", s(&cfg), "--out", s(&run)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let ckpt = run.join("best.ckpt");

    // a batch larger than the data is a data error
    let big = dir.path().join("big.json");
    std::fs::write(&big, r#"{"train": {"batch_size": 500}, "data": {"manifest": "corpus/manifest.jsonl"}}"#).unwrap();
    let out = clamp(&["train", "--config", s(&big), "--out", s(&dir.path().join("r2"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch size"));

    let cif = corpus.join("cifs/photocatalyst-0000.cif");
    let prompts = dir.path().join("prompts.txt");
    std::fs::write(&prompts, "only one\n").unwrap();
    let out = clamp(&["classify", "--ckpt", s(&ckpt), "--cif", s(&cif), "--prompts", s(&prompts)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.trim_end().split('\t').collect();
    assert_eq!(fields.len(), 3);
    assert_eq!(fields[0], "1");
    assert_eq!(fields[1].split('.').nth(1).unwrap().len(), 6);
    assert_eq!(fields[2], "only one");

    let out = clamp(&["classify", "--ckpt", s(&ckpt), "--cif", s(&cif), "--prompts", s(&corpus.join("prompts.txt"))]);
    let lines: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 2);
    let scores: Vec<f64> = lines.iter().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(scores[0] >= scores[1]);

    std::fs::write(&prompts, "").unwrap();
    assert_eq!(clamp(&["classify", "--ckpt", s(&ckpt), "--cif", s(&cif), "--prompts", s(&prompts)]).status.code(), Some(1));
    let junk = dir.path().join("junk.cif");
    std::fs::write(&junk, "data_x\n_cell_length_a 3\n").unwrap();
    std::fs::write(&prompts, "a\n").unwrap();
    assert_eq!(clamp(&["classify", "--ckpt", s(&ckpt), "--cif", s(&junk), "--prompts", s(&prompts)]).status.code(), Some(2));

    let m = corpus.join("manifest.jsonl");
    let emb = dir.path().join("c.emb");
    let out = clamp(&["embed", "--ckpt", s(&ckpt), "--manifest", s(&m), "--out", s(&emb), "--modality", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let (matrix, _) = clamp_core::pipeline::load_embeddings(&emb).unwrap();
    assert_eq!(matrix.len(), 24);

    let out = clamp(&["eval", "--ckpt", s(&ckpt), "--manifest", s(&m)]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 24);
    for k in ["crystal_to_text", "text_to_crystal", "recall_at_1", "recall_at_5", "recall_at_10"] {
        assert!((0.0..=1.0).contains(&report[k].as_f64().unwrap()), "{k}");
    }

    // one unparsable record: strict commands fail, --skip-bad continues
    std::fs::write(corpus.join("cifs/bad.cif"), "garbage").unwrap();
    let mut text = std::fs::read_to_string(&m).unwrap();
    text.push_str("{\"id\":\"bad\",\"cif\":\"cifs/bad.cif\",\"text\":\"nothing\"}\n");
    std::fs::write(&m, text).unwrap();
    assert_eq!(clamp(&["embed", "--ckpt", s(&ckpt), "--manifest", s(&m), "--out", s(&emb)]).status.code(), Some(2));
    assert_eq!(clamp(&["eval", "--ckpt", s(&ckpt), "--manifest", s(&m)]).status.code(), Some(2));
    assert_eq!(clamp(&["embed", "--ckpt", s(&ckpt), "--manifest", s(&m), "--out", s(&emb), "--skip-bad"]).status.code(), Some(0));
    assert_eq!(clamp_core::pipeline::load_embeddings(&emb).unwrap().0.len(), 24);
}
