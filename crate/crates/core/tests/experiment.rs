use std::fs;

use tdd_sim::experiment::{
    parse_experiment, run_experiment, sweep_rows, ExperimentError, ExperimentSpec, RESULTS_FILE,
};
use tdd_sim::traffic::LinkDirection;
use tdd_sim::Scheme;

fn tiny(out: &std::path::Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec {
        lambda_dl: vec![0.5, 1.0],
        seeds: vec![1, 2, 3],
        output_dir: out.to_owned(),
        ..ExperimentSpec::default()
    };
    spec.base.layout.n_sites = 1;
    spec.base.layout.picos_per_sector = 1;
    spec.base.layout.ues_per_pico = 3;
    spec.base.duration_ms = 2_000;
    spec.base.warmup_ms = 200;
    spec
}

#[test]
fn row_count_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_rows(&tiny(dir.path())).unwrap();
    assert_eq!(rows.len(), 24);
    let keys: Vec<_> = rows
        .iter()
        .map(|r| (r.lambda_ul.to_bits(), r.scheme, r.seed, r.direction.index()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(rows[0].lambda_ul, 0.25);
    assert_eq!(rows[0].direction, LinkDirection::Downlink);
    for r in rows.iter().filter(|r| r.scheme == Scheme::Baseline) {
        assert_eq!(r.mean_delta_db, 0.0);
    }
}

#[test]
fn csv_header_and_bytes_stable_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = tiny(a.path());
    spec.workers = Some(1);
    let pa = run_experiment(&spec).unwrap();
    spec.output_dir = b.path().to_owned();
    spec.workers = Some(3);
    let pb = run_experiment(&spec).unwrap();
    let (ta, tb) = (fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "lambda_ul,scheme,seed,direction,avg_tput_mbps,p5_tput_mbps,completion_ratio,mean_delta_db"
    );
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn failing_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let mut spec = tiny(&out);
    // cannot place this many picos 40 m apart inside one sector
    spec.base.layout.picos_per_sector = 300;
    spec.base.layout.max_attempts = 50;
    match run_experiment(&spec) {
        Err(ExperimentError::Run { .. }) => {}
        other => panic!("expected run failure, got {other:?}"),
    }
    assert!(!out.join(RESULTS_FILE).exists());
    assert!(!out.join(format!("{RESULTS_FILE}.partial")).exists());
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(
        &path,
        "duration_ms = 5000\nscheme = \"baseline\"\n\n[layout]\nn_sites = 1\n\n[experiment]\nseeds = [4, 5]\nschemes = [\"proposed\"]\n",
    )
    .unwrap();
    let spec = parse_experiment(&path).unwrap();
    assert_eq!(spec.base.duration_ms, 5000);
    assert_eq!(spec.base.layout.n_sites, 1);
    assert_eq!(spec.seeds, vec![4, 5]);
    assert_eq!(spec.schemes, vec![Scheme::Proposed]);
    assert!(matches!(
        parse_experiment(&dir.path().join("missing.toml")),
        Err(ExperimentError::Read { .. })
    ));
}
