use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nsgraph::pipeline::{files, Run, RunConfig, Stage};
use nsgraph::Error;

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.conf");
    let text = format!(
        "input.format = spirals\nspirals.n_per_arm = 120\nseed = 4\nk = 10\nfilter = sA>=0.5\n\
         sweep.steps = 20\nsweep.snapshots = 1, 0.5, 0\nncut.min_cluster_size = 20\n\
         reassign.major_min_size = 40\noutput = out\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path
}

fn nsgraph(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nsgraph")).args(args).output().unwrap()
}

#[test]
fn full_chain_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "");
    let conf = conf.to_str().unwrap();
    for stage in ["build", "filter", "scc", "sweep", "ncut", "reassign", "eval"] {
        let out = nsgraph(&[stage, "--config", conf]);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out_dir = dir.path().join("out");
    let edges = fs::read_to_string(out_dir.join(files::EDGES)).unwrap();
    assert_eq!(edges.lines().count(), 1 + 240 * 10);

    let pgms = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm"))
        .count();
    assert_eq!(pgms, 3);

    let log = fs::read_to_string(out_dir.join(files::LOG)).unwrap();
    let stages: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(stages, ["build", "filter", "scc", "sweep", "ncut", "reassign", "eval"]);

    let eval = fs::read_to_string(out_dir.join(files::EVAL)).unwrap();
    assert!(eval.lines().any(|l| l.starts_with("final ")));
}

#[test]
fn rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::new(RunConfig::load(write_config(dir.path(), ""), &[]).unwrap());
    run.run(Stage::Build).unwrap();
    let first = fs::read(run.path(files::EDGES)).unwrap();
    let meta = fs::read(run.path(files::DATASET)).unwrap();
    run.run(Stage::Build).unwrap();
    assert_eq!(fs::read(run.path(files::EDGES)).unwrap(), first);
    assert_eq!(fs::read(run.path(files::DATASET)).unwrap(), meta);
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::new(RunConfig::load(write_config(dir.path(), ""), &[]).unwrap());
    match run.run(Stage::Filter) {
        Err(Error::MissingArtifact { stage, .. }) => assert_eq!(stage, "build"),
        other => panic!("expected a missing artifact, got {other:?}"),
    }
    run.run(Stage::Build).unwrap();
    match run.run(Stage::Ncut) {
        Err(e @ Error::MissingArtifact { .. }) => assert!(e.to_string().contains("nsgraph filter")),
        other => panic!("expected a missing artifact, got {other:?}"),
    }

    let out = nsgraph(&["reassign", "--config", write_config(dir.path(), "").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(Stage::Reassign.exit_code() as i32));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nsgraph ncut"));
}

#[test]
fn k_not_below_n_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "");
    let out = nsgraph(&["build", "--config", conf.to_str().unwrap(), "--override", "k=240"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nsgraph(&["build", "--config", conf.to_str().unwrap(), "--override", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = nsgraph(&["build", "--config", dir.path().join("absent.conf").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_are_distinct_per_stage() {
    let mut codes: Vec<u8> = Stage::ALL.iter().map(|s| s.exit_code()).collect();
    codes.sort();
    codes.dedup();
    assert_eq!(codes.len(), Stage::ALL.len());
    assert!(codes.iter().all(|&c| c != 0 && c != 2));
}

#[test]
fn eval_of_truth_partition_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    let labels: String = (0..240).map(|i| format!("{i} {}\n", i / 120)).collect();
    fs::write(&truth, labels).unwrap();
    let run = Run::new(RunConfig::load(write_config(dir.path(), "eval.partition = truth.txt\n"), &[]).unwrap());
    run.run(Stage::Build).unwrap();
    let report = run.run(Stage::Eval).unwrap();
    let value = report.summary.as_object().unwrap().values().next().unwrap().as_f64().unwrap();
    assert_eq!(value, 1.0);
}

#[test]
fn explicit_merge_spec_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("merge.txt"), "merge 0 1\n").unwrap();
    let run = Run::new(RunConfig::load(write_config(dir.path(), "merge.spec = merge.txt\n"), &[]).unwrap());
    for stage in [Stage::Build, Stage::Filter, Stage::Ncut, Stage::Reassign] {
        run.run(stage).unwrap();
    }
    let ncut = nsgraph::Partition::load(run.path(files::NCUT_PARTITION)).unwrap();
    let merged = nsgraph::Partition::load(run.path(files::MERGED_PARTITION)).unwrap();
    assert_eq!(merged.count(), ncut.count() - 1);
}
