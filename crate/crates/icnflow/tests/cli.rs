//! End-to-end tests of the command-line binary: the synth -> train ->
//! predict -> evaluate walk, report merging, tensor export, and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_icnflow"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("icnflow-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed ({:?}): {}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap_or(-1)
}

#[test]
fn synth_train_predict_evaluate_walk() {
    let dir = temp_dir("walk");
    // labeled training cohort and an unlabeled test cohort with truth file
    run_ok(bin().args([
        "synth", "--out", "train", "--n", "24", "--seed", "5", "--length", "120",
        "--workdir", dir.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "synth", "--out", "test", "--n", "10", "--seed", "6", "--length", "120", "--unlabeled",
        "--workdir", dir.to_str().unwrap(),
    ]));
    assert!(dir.join("train/manifest.csv").exists());
    assert!(dir.join("test/labels.csv").exists());
    let test_manifest = std::fs::read_to_string(dir.join("test/manifest.csv")).unwrap();
    for line in test_manifest.lines().skip(1) {
        assert!(line.contains(",,"), "unlabeled manifest should have empty labels: {line}");
    }

    run_ok(bin().args([
        "features", "--manifest", "train/manifest.csv", "--out", "fnc.csv",
        "--workdir", dir.to_str().unwrap(),
    ]));
    let fnc = std::fs::read_to_string(dir.join("fnc.csv")).unwrap();
    let first = fnc.lines().next().unwrap();
    assert_eq!(first.split(',').count(), 1 + icnflow::FNC_LEN);

    run_ok(bin().args([
        "train", "--feature-set", "fnc_top20", "--model", "gnb",
        "--manifest", "train/manifest.csv", "--seed", "9", "--folds", "3", "--out", "run",
        "--workdir", dir.to_str().unwrap(),
    ]));
    for artifact in ["report.csv", "report.json", "model.json", "config.json", "grid_cv.csv", "holdout_scores.csv"] {
        assert!(dir.join("run").join(artifact).exists(), "{artifact} missing");
    }

    run_ok(bin().args([
        "predict", "--model", "run/model.json", "--manifest", "test/manifest.csv",
        "--out", "scores.csv", "--workdir", dir.to_str().unwrap(),
    ]));
    let scores = std::fs::read_to_string(dir.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 11); // header + 10 subjects
    for line in scores.lines().skip(1) {
        let (_, s) = line.split_once(',').unwrap();
        let s: f64 = s.parse().unwrap();
        assert!((0.0..=1.0).contains(&s));
    }

    let out = run_ok(bin().args([
        "evaluate", "--scores", "scores.csv", "--labels", "test/labels.csv",
        "--workdir", dir.to_str().unwrap(),
    ]));
    assert!(out.contains("\"auc\""), "{out}");

    // two evaluation sets report each AUC and the mean
    let out = run_ok(bin().args([
        "evaluate", "--scores", "scores.csv", "--labels", "test/labels.csv",
        "--scores2", "scores.csv", "--labels2", "test/labels.csv",
        "--workdir", dir.to_str().unwrap(),
    ]));
    assert!(out.contains("mean_auc"), "{out}");

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn predict_scores_match_persisted_model_rescoring() {
    let dir = temp_dir("rescore");
    run_ok(bin().args([
        "synth", "--out", "data", "--n", "16", "--seed", "3", "--length", "100",
        "--workdir", dir.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "train", "--feature-set", "fnc_all", "--model", "knn",
        "--manifest", "data/manifest.csv", "--seed", "4", "--folds", "3", "--out", "run",
        "--workdir", dir.to_str().unwrap(),
    ]));
    // predicting the training cohort must reproduce the holdout rows exactly
    run_ok(bin().args([
        "predict", "--model", "run/model.json", "--manifest", "data/manifest.csv",
        "--out", "all_scores.csv", "--workdir", dir.to_str().unwrap(),
    ]));
    let holdout = std::fs::read_to_string(dir.join("run/holdout_scores.csv")).unwrap();
    let all = std::fs::read_to_string(dir.join("all_scores.csv")).unwrap();
    let lookup: std::collections::HashMap<&str, &str> = all
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap())
        .collect();
    for line in holdout.lines().skip(1) {
        let (id, score) = line.split_once(',').unwrap();
        assert_eq!(lookup[id], score, "subject {id}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn train_rerun_reports_identical_modulo_runtime() {
    let dir = temp_dir("rerun");
    for out in ["a", "b"] {
        run_ok(bin().args([
            "train", "--feature-set", "fnc_all", "--model", "lda", "--synth-n", "20",
            "--seed", "8", "--folds", "3", "--out", out,
            "--workdir", dir.to_str().unwrap(),
        ]));
    }
    let strip_runtime = |text: String| -> Vec<String> {
        text.lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                let mut kept = cols.clone();
                if kept.len() == 7 {
                    kept.remove(5);
                }
                kept.join(",")
            })
            .collect()
    };
    let a = strip_runtime(std::fs::read_to_string(dir.join("a/report.csv")).unwrap());
    let b = strip_runtime(std::fs::read_to_string(dir.join("b/report.csv")).unwrap());
    assert_eq!(a, b);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn report_merges_runs() {
    let dir = temp_dir("report");
    for (out, seed) in [("a", "1"), ("b", "2")] {
        run_ok(bin().args([
            "train", "--feature-set", "fnc_all", "--model", "gnb", "--synth-n", "16",
            "--seed", seed, "--folds", "3", "--out", out,
            "--workdir", dir.to_str().unwrap(),
        ]));
    }
    run_ok(bin().args([
        "report", "a/report.csv", "b/report.csv", "--out", "combined.csv",
        "--workdir", dir.to_str().unwrap(),
    ]));
    let combined = std::fs::read_to_string(dir.join("combined.csv")).unwrap();
    assert_eq!(combined.lines().count(), 3); // header + 2 holdout rows
    assert!(dir.join("combined.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn export_tensor_slice_matches_library() {
    let dir = temp_dir("export");
    run_ok(bin().args([
        "synth", "--out", "data", "--n", "4", "--seed", "2",
        "--workdir", dir.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "export-tensor", "--manifest", "data/manifest.csv", "--subject", "synth-0001",
        "--kind", "spectrogram", "--axis", "2", "--index", "7", "--out", "slice.csv",
        "--workdir", dir.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(dir.join("slice.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 12, "axis-2 slice is bins x frames");
    assert_eq!(rows[0].split(',').count(), 11);

    // library computation of the same slice
    let ds = icnflow::dataio::load_dataset(Path::new(&dir.join("data/manifest.csv")), 2.0).unwrap();
    let subject = &ds.subjects()[1];
    let tensor = icnflow::timefreq::stack_subject_tensor(
        &subject.icn,
        icnflow::timefreq::TensorKind::Spectrogram,
        &Default::default(),
        &Default::default(),
    )
    .unwrap();
    let expect = tensor.data.slice(2, 7);
    for (r, line) in rows.iter().enumerate() {
        for (c, cell) in line.split(',').enumerate() {
            let v: f64 = cell.parse().unwrap();
            let e = expect.get(r, c);
            assert!(
                (v - e).abs() <= 1e-12 * e.abs().max(1.0),
                "({r},{c}): {v} vs {e}"
            );
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = temp_dir("codes");
    // config error: incompatible pairing
    assert_eq!(
        exit_code(bin().args([
            "train", "--feature-set", "raw_icn", "--model", "lda", "--synth-n", "16",
            "--out", "x", "--workdir", dir.to_str().unwrap(),
        ])),
        2
    );
    // config error: unknown flag (clap usage error)
    assert_eq!(exit_code(bin().args(["train", "--nonsense"])), 2);
    // data error: missing manifest
    assert_eq!(
        exit_code(bin().args([
            "features", "--manifest", "missing.csv", "--out", "f.csv",
            "--workdir", dir.to_str().unwrap(),
        ])),
        3
    );
    // data error: wrong channel count, message names the file and expectation
    let bad = dir.join("bad");
    std::fs::create_dir_all(&bad).unwrap();
    let mut body = String::new();
    for _ in 0..104 {
        body.push_str("0.0,1.0,2.0\n");
    }
    std::fs::write(bad.join("s.csv"), body).unwrap();
    std::fs::write(
        bad.join("manifest.csv"),
        "subject_id,label,icn_path\ns-1,SZ,s.csv\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "features", "--manifest", "bad/manifest.csv", "--out", "f.csv",
            "--workdir", dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("s.csv"), "{stderr}");
    assert!(stderr.contains("104") && stderr.contains("105"), "{stderr}");

    // numeric failure: a constant channel makes the correlation undefined
    let flat = dir.join("flat");
    std::fs::create_dir_all(&flat).unwrap();
    let mut body = String::new();
    for c in 0..105 {
        if c == 42 {
            body.push_str("1.0,1.0,1.0,1.0\n");
        } else {
            body.push_str(&format!("{}.0,{}.5,-{}.25,0.{}\n", c, c, c, c + 1));
        }
    }
    std::fs::write(flat.join("s.csv"), body).unwrap();
    std::fs::write(
        flat.join("manifest.csv"),
        "subject_id,label,icn_path\ns-1,SZ,s.csv\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "features", "--manifest", "flat/manifest.csv", "--out", "f.csv",
            "--workdir", dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("42"),
        "constant-channel error should name the channel"
    );
    let _ = std::fs::remove_dir_all(&dir);
}
