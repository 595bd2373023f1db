mod common;

use std::fs;
use std::path::Path;

use common::{desk_spec, write};
use mbsarah_harness::{run_experiment, ExperimentSpec, RunStatus};

const TWO_RUNS: &str = "\
[run.fixed]
method = \"mb_sarah_fixed\"
b = 4
eta = 0.5
outer = 4

[run.rbb]
method = \"mb_sarah_rbb\"
b = 4
b_h = 20
gamma = 0.1
eta_0 = 0.1
outer = 5
";

fn load(dir: &Path, text: &str) -> ExperimentSpec {
    let path = dir.join("spec.toml");
    write(&path, text);
    ExperimentSpec::load(&path).unwrap()
}

fn data_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn writes_traces_combined_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = load(dir.path(), &desk_spec(200, 5, &[0, 1], TWO_RUNS));
    let outcome = run_experiment(&spec, false).unwrap();
    assert!(outcome.all_completed());
    assert_eq!(outcome.runs.len(), 4);

    let out = dir.path().join("out");
    for name in [
        "fixed-seed0.csv",
        "fixed-seed1.csv",
        "rbb-seed0.csv",
        "rbb-seed1.csv",
        "fixed-mean.csv",
        "rbb-mean.csv",
        "rbb.theory.txt",
        "combined.csv",
        "summary.txt",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    assert!(!out.join("fixed.theory.txt").exists());

    let header = csv::Reader::from_path(out.join("rbb-seed0.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(&header[0], "label");
    assert_eq!(&header[1], "seed");
    assert_eq!(&header[header.len() - 1], "suboptimality");

    // 2 seeds × (4 + 5) outer loops
    let combined = data_rows(&out.join("combined.csv"));
    assert_eq!(combined.len(), 18);
    for row in &combined {
        let sub: f64 = row[row.len() - 1].parse().unwrap();
        assert!(sub >= -1e-10, "negative suboptimality {sub}");
    }

    let theory = fs::read_to_string(out.join("rbb.theory.txt")).unwrap();
    assert!(theory.contains("condition_13_lhs = "));
    assert!(theory.contains("rho_m = "));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = load(dir.path(), &desk_spec(200, 5, &[3, 4], TWO_RUNS));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    spec.output_dir = a.clone();
    run_experiment(&spec, false).unwrap();
    spec.output_dir = b.clone();
    run_experiment(&spec, false).unwrap();

    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn divergence_is_flagged_and_partial_outputs_kept() {
    let dir = tempfile::tempdir().unwrap();
    let runs = "\
[run.blowup]
method = \"mb_sarah_fixed\"
b = 1
eta = 1e6
outer = 50

[run.fine]
method = \"mb_sarah_fixed\"
b = 4
eta = 0.5
outer = 2
";
    let spec = load(dir.path(), &desk_spec(100, 4, &[0], runs));
    let outcome = run_experiment(&spec, false).unwrap();
    assert!(!outcome.all_completed());
    let blowup = outcome.runs.iter().find(|r| r.label == "blowup").unwrap();
    assert!(matches!(blowup.status, RunStatus::Diverged { .. }), "{:?}", blowup.status);

    let out = dir.path().join("out");
    assert_eq!(data_rows(&out.join("fine-seed0.csv")).len(), 2);
    assert!(out.join("blowup-seed0.csv").is_file());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("blowup,0,DIVERGED")), "{summary}");
    assert!(summary.lines().any(|l| l.starts_with("fine,0,ok")));
}

#[test]
fn stepsize_passes_axis_is_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = load(dir.path(), &desk_spec(200, 5, &[0], TWO_RUNS));
    run_experiment(&spec, true).unwrap();
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("passes_axis = passes_incl_stepsize"));
    let mean = data_rows(&dir.path().join("out/rbb-mean.csv"));
    let first: f64 = mean[0][1].parse().unwrap();
    // m = 2n/b = 100: (200 + 2·4·99 + 2·20·99) / 200
    assert_eq!(first, (200.0 + 8.0 * 99.0 + 40.0 * 99.0) / 200.0);
}

fn readme_toml_blocks() -> Vec<String> {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    readme
        .split("```toml\n")
        .skip(1)
        .map(|chunk| chunk.split("```").next().unwrap().to_string())
        .collect()
}

#[test]
fn readme_example_parses_and_runs_on_synthetic_data() {
    let blocks = readme_toml_blocks();
    assert_eq!(blocks.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::parse(&blocks[0], dir.path()).unwrap();
    assert_eq!(spec.runs.len(), 6);
    assert_eq!(spec.lambda, 0.01);

    // swap the a8a [experiment] table for the synthetic one
    let runs = &blocks[0][blocks[0].find("[reference]").unwrap()..];
    let text = format!("{}\n{runs}", blocks[1]);
    let mut spec = ExperimentSpec::parse(&text, dir.path()).unwrap();
    spec.output_dir = dir.path().join("out");
    spec.cache_dir = dir.path().join("cache");
    spec.seeds = vec![0];
    let outcome = run_experiment(&spec, false).unwrap();
    assert!(outcome.all_completed());
    let combined = data_rows(&dir.path().join("out/combined.csv"));
    assert_eq!(combined.len(), 6 * 30);
    let sweep = mbsarah_harness::run_sweep(&spec, false).unwrap();
    assert_eq!(sweep.points.len(), 7);
    assert!(sweep.best_point().is_some());
}
