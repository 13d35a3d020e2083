//! End-to-end tests of the installed binary: exit codes, artifact layout,
//! determinism across reruns and thread counts, and the full pipeline on
//! a miniature dataset.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn poseforge(args: &[&str], extra: &[(&str, String)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_poseforge"));
    cmd.args(args);
    for (k, v) in extra {
        cmd.arg("--set").arg(format!("{k}={v}"));
    }
    cmd.env_remove("POSEFORGE_THREADS");
    cmd.output().expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?})\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Settings small enough for test time but large enough for the
/// benchmark protocol (period 8 in 96 frames leaves 11 same-phase
/// frames per query, one more than an exemplar needs).
fn tiny_config(dir: &Path) -> Vec<(&'static str, String)> {
    vec![
        ("seed", "11".to_string()),
        ("data.dir", dir.join("data").display().to_string()),
        ("out.dir", dir.join("out").display().to_string()),
        ("synth.clips", "2".to_string()),
        ("synth.n_frames", "96".to_string()),
        ("synth.period", "8".to_string()),
        ("curriculum.update_interval", "4".to_string()),
        ("train.batch_size", "8".to_string()),
        ("train.total_iterations", "24".to_string()),
        ("eval.n_queries", "12".to_string()),
        ("eval.exemplars_per_clip", "3".to_string()),
    ]
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    String::from_utf8(read(path))
        .expect("csv is utf-8")
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_or_malformed_settings_exit_2() {
    let out = poseforge(&["synth", "--set", "bogus.key=1"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("bogus.key"), "stderr: {}", stderr_of(&out));

    let out = poseforge(&["synth", "--set", "no-equals-sign"], &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = poseforge(&["synth", "--set", "eval.n_queries=0"], &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = poseforge(&["train", "--config", "/nonexistent/config.txt"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_pipeline_inputs_exit_2_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());

    // No dataset yet: everything downstream of synth refuses to start.
    let out = poseforge(&["flow"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("manifest.tsv"), "stderr: {}", stderr_of(&out));

    let out = poseforge(&["synth"], &cfg);
    assert_ok(&out, "synth");

    // Dataset exists but no schedule: train names the missing file and
    // the step that produces it.
    let out = poseforge(&["train"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("schedule.tsv"), "stderr: {err}");
    assert!(err.contains("curriculum"), "stderr: {err}");

    // No checkpoint: mining refuses likewise.
    let out = poseforge(&["mine-reps"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("checkpoint.pfck"), "stderr: {}", stderr_of(&out));
}

#[test]
fn synth_reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_ok(&poseforge(&["synth"], &tiny_config(a.path())), "synth a");
    assert_ok(&poseforge(&["synth"], &tiny_config(b.path())), "synth b");

    for rel in [
        "data/manifest.tsv",
        "data/gt.tsv",
        "data/frames/clip000/00000.pgm",
        "data/frames/clip001/00095.pgm",
    ] {
        assert_eq!(
            read(&a.path().join(rel)),
            read(&b.path().join(rel)),
            "{rel} differs between identical runs"
        );
    }

    // Run manifests agree on every content hash (the config echo differs
    // in the directory paths, the artifacts must not).
    let hashes = |root: &Path| -> Vec<String> {
        String::from_utf8(read(&root.join("out/run-manifest-synth.txt")))
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("sha256 "))
            .map(str::to_string)
            .collect()
    };
    let ha = hashes(a.path());
    assert!(!ha.is_empty());
    assert_eq!(ha, hashes(b.path()));
}

#[test]
fn flow_scores_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    assert_ok(&poseforge(&["synth"], &cfg), "synth");

    cfg.push(("flow.cache", "true".to_string()));
    let out1 = dir.path().join("out1");
    let out4 = dir.path().join("out4");
    let mut cfg1 = cfg.clone();
    cfg1[2].1 = out1.display().to_string();
    let mut cfg4 = cfg.clone();
    cfg4[2].1 = out4.display().to_string();

    assert_ok(&poseforge(&["flow", "--threads", "1"], &cfg1), "flow -t1");
    assert_ok(&poseforge(&["flow", "--threads", "4"], &cfg4), "flow -t4");

    assert_eq!(read(&out1.join("scores.tsv")), read(&out4.join("scores.tsv")));
    assert_eq!(
        read(&out1.join("flow/clip000_00000.pflw")),
        read(&out4.join("flow/clip000_00000.pflw")),
    );
}

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = |rel: &str| dir.path().join("out").join(rel);

    assert_ok(&poseforge(&["synth"], &cfg), "synth");
    assert!(out("../data/gt.tsv").exists());

    assert_ok(&poseforge(&["flow"], &cfg), "flow");
    assert!(out("scores.tsv").is_file());

    assert_ok(&poseforge(&["curriculum"], &cfg), "curriculum");
    assert!(out("schedule.tsv").is_file());

    assert_ok(&poseforge(&["sample"], &cfg), "sample");
    assert!(out("tuples.tsv").is_file());

    assert_ok(&poseforge(&["train"], &cfg), "train");
    assert!(out("checkpoint.pfck").is_file());
    let log = String::from_utf8(read(&out("loss_log.tsv"))).unwrap();
    assert_eq!(log.lines().count(), 24, "one loss row per iteration");
    for line in log.lines() {
        let total: f64 = line.split('\t').nth(3).unwrap().parse().unwrap();
        assert!(total.is_finite());
    }

    let mut mine_cfg = cfg.clone();
    mine_cfg.push(("miner.dump_ssm", "true".to_string()));
    assert_ok(&poseforge(&["mine-reps"], &mine_cfg), "mine-reps");
    assert!(out("groups.tsv").is_file());
    assert!(out("mined_tuples.tsv").is_file());
    assert!(out("ssm/clip000.pssm").is_file());

    // Bootstrap round: continue from the checkpoint with the mined
    // tuples joined into the earliest block.
    let mut retrain_cfg = cfg.clone();
    retrain_cfg.push(("train.resume", out("checkpoint.pfck").display().to_string()));
    retrain_cfg.push(("train.mined_tuples", out("mined_tuples.tsv").display().to_string()));
    retrain_cfg.push(("train.total_iterations", "6".to_string()));
    assert_ok(&poseforge(&["train"], &retrain_cfg), "retrain");
    let log = String::from_utf8(read(&out("loss_log.tsv"))).unwrap();
    assert_eq!(log.lines().count(), 6, "retraining rewrites the loss log");

    assert_ok(&poseforge(&["embed"], &cfg), "embed");
    assert!(out("embeddings/clip000.pemb").is_file());
    assert!(out("embeddings/clip001.pemb").is_file());

    assert_ok(&poseforge(&["eval-posture"], &cfg), "eval-posture");
    let rows = csv_rows(&out("eval_posture.csv"));
    assert_eq!(rows[0], vec!["clip", "exemplars", "average_auc"]);
    assert_eq!(rows.len(), 4, "two clips plus header and summary");
    assert_eq!(rows[3][0], "mean");
    let auc: f64 = rows[3][2].parse().unwrap();
    assert!((0.0..=1.0).contains(&auc), "AuC {auc} out of range");

    let mut retr_cfg = cfg.clone();
    retr_cfg.push(("eval.svg", "true".to_string()));
    assert_ok(&poseforge(&["eval-retrieval"], &retr_cfg), "eval-retrieval");
    let rows = csv_rows(&out("eval_retrieval.csv"));
    assert_eq!(rows[0], vec!["k", "mean_pose_distance", "hitrate_nn", "hitrate_rel"]);
    assert_eq!(rows.len(), 6, "four K values plus header and mean");
    assert_eq!(rows[5][0], "mean");
    assert!(out("retrieval_plot.svg").is_file());

    assert_ok(&poseforge(&["eval-pose"], &cfg), "eval-pose");
    let rows = csv_rows(&out("eval_pose.csv"));
    assert_eq!(rows[0], vec!["metric", "name", "value"]);
    // 11 parts + pcp mean + 14 joints + pckh total.
    assert_eq!(rows.len(), 28);
    assert_eq!(rows[12][0..2], ["pcp".to_string(), "mean".to_string()]);
    assert_eq!(rows[27][0..2], ["pckh".to_string(), "total".to_string()]);

    // Every command wrote its run manifest.
    for cmd in [
        "synth", "flow", "curriculum", "sample", "train", "mine-reps", "embed",
        "eval-posture", "eval-retrieval", "eval-pose",
    ] {
        assert!(
            out(&format!("run-manifest-{cmd}.txt")).is_file(),
            "missing run manifest for {cmd}"
        );
    }
}

#[test]
fn ablation_tabulates_and_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    // Ablation synthesizes per variant; keep each variant fast.
    for (k, v) in cfg.iter_mut() {
        if *k == "train.total_iterations" {
            *v = "4".to_string();
        }
    }

    let out = poseforge(
        &[
            "ablation",
            "--variant",
            "base",
            "--variant",
            "broken:train.tasks=bogus",
        ],
        &cfg,
    );
    assert_ok(&out, "ablation");
    let rows = csv_rows(&dir.path().join("out/ablation.csv"));
    assert_eq!(rows[0], vec!["variant", "average_auc", "status"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "base");
    assert_eq!(rows[1][2], "ok");
    let auc: f64 = rows[1][1].parse().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert_eq!(rows[2][0], "broken");
    assert!(rows[2][1].is_empty());
    assert!(rows[2][2].starts_with("failed:"), "status: {}", rows[2][2]);
    // The healthy variant ran in its own directory.
    assert!(dir.path().join("out/base/eval_posture.csv").is_file());
    assert!(dir.path().join("out/base/data/manifest.tsv").is_file());

    // Variant problems the command itself can see are config mistakes.
    let out = poseforge(&["ablation", "--variant", "x", "--variant", "x"], &cfg);
    assert_eq!(out.status.code(), Some(2));

    // An empty variant list still produces the CSV header.
    let empty_dir = tempfile::tempdir().unwrap();
    let out = poseforge(&["ablation"], &tiny_config(empty_dir.path()));
    assert_ok(&out, "empty ablation");
    let rows = csv_rows(&empty_dir.path().join("out/ablation.csv"));
    assert_eq!(rows, vec![vec!["variant", "average_auc", "status"]]);
}
