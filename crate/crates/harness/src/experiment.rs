//! Executing experiment specs and writing their reports.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mbsarah::data::{fetch_dataset, generate_synthetic, normalize_rows, parse_libsvm, FetchConfig, HttpDownloader, ParseOptions};
use mbsarah::objective::Objective;
use mbsarah::solvers::{record_fields, TRACE_CSV_HEADER};
use mbsarah::theory::{TheoryInputs, TheoryReport};
use mbsarah::{Dataset, LogisticL2, ObjectiveKind, RidgeL2, RunTrace, SolverConfig, SolverError, StepRule};
use rayon::prelude::*;

use crate::reference::{cached_reference, CachedReference};
use crate::spec::{DatasetChoice, ExperimentSpec, RunSpec};
use crate::HarnessError;

/// Per-run CSV columns: label, seed, the solver trace columns, suboptimality.
pub fn run_csv_header() -> Vec<&'static str> {
    let mut h = vec!["label", "seed"];
    h.extend(TRACE_CSV_HEADER);
    h.push("suboptimality");
    h
}

pub fn load_dataset(spec: &ExperimentSpec) -> Result<Dataset<f64>, HarnessError> {
    let ds = match &spec.dataset {
        DatasetChoice::Named(name) => {
            let config = match &spec.fetch_config {
                Some(p) => FetchConfig::load(p)?,
                None => FetchConfig::default(),
            };
            fetch_dataset(*name, &spec.cache_dir, &config, &HttpDownloader)?.dataset
        }
        DatasetChoice::Synthetic(s) => generate_synthetic(s).map_err(|e| HarnessError::Data(e.to_string()))?,
        DatasetChoice::File { path, task } => {
            let file = File::open(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            let name = path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
            let opts = ParseOptions {
                task: *task,
                dim: None,
                name,
            };
            parse_libsvm(BufReader::new(file), &opts).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?
        }
    };
    Ok(if spec.normalize { normalize_rows(&ds).0 } else { ds })
}

pub fn build_objective(spec: &ExperimentSpec, ds: Dataset<f64>) -> Result<Box<dyn Objective<f64>>, HarnessError> {
    let obj: Box<dyn Objective<f64>> = match spec.objective {
        ObjectiveKind::Logistic => Box::new(LogisticL2::new(ds, spec.lambda)?),
        ObjectiveKind::Ridge => Box::new(RidgeL2::new(ds, spec.lambda)?),
    };
    Ok(obj)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { outer_index: usize },
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Complete for finished runs, partial for diverged ones, absent on failure.
    pub trace: Option<RunTrace<f64>>,
}

impl RunOutcome {
    pub fn final_suboptimality(&self, p_star: f64) -> Option<f64> {
        self.trace
            .as_ref()
            .and_then(|t| t.final_record())
            .map(|r| r.objective_value - p_star)
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub reference: CachedReference,
    pub runs: Vec<RunOutcome>,
    pub output_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.status == RunStatus::Completed)
    }
}

pub(crate) fn execute(obj: &dyn Objective<f64>, label: &str, cfg: Result<SolverConfig<f64>, String>) -> RunOutcome {
    let seed = cfg.as_ref().map_or(0, |c| c.seed);
    let (status, trace) = match cfg.map(|c| mbsarah::run(obj, &c)) {
        Err(msg) => (RunStatus::Failed(msg), None),
        Ok(Ok(trace)) => (RunStatus::Completed, Some(trace)),
        Ok(Err(SolverError::Diverged { outer_index, trace, .. })) => (RunStatus::Diverged { outer_index }, Some(*trace)),
        Ok(Err(e)) => (RunStatus::Failed(e.to_string()), None),
    };
    RunOutcome {
        label: label.to_string(),
        seed,
        status,
        trace,
    }
}

/// Runs every (run × seed) pair, in parallel, against the cached reference
/// and writes the report files into `spec.output_dir`.
///
/// Failed or diverged runs do not abort the others; the caller decides the
/// exit status from [`ExperimentOutcome::all_completed`].
pub fn run_experiment(spec: &ExperimentSpec, passes_include_stepsize: bool) -> Result<ExperimentOutcome, HarnessError> {
    let ds = load_dataset(spec)?;
    let obj = build_objective(spec, ds)?;
    let reference = cached_reference(obj.as_ref(), &spec.reference, &spec.cache_dir)?;
    let n = obj.n();

    let jobs: Vec<(&RunSpec, u64)> = spec
        .runs
        .iter()
        .flat_map(|r| spec.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let runs: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|(r, seed)| {
            let mut out = execute(obj.as_ref(), &r.label, r.config(n, *seed));
            out.seed = *seed;
            out
        })
        .collect();

    let outcome = ExperimentOutcome {
        reference,
        runs,
        output_dir: spec.output_dir.clone(),
    };
    write_reports(spec, obj.as_ref(), &outcome, passes_include_stepsize)?;
    Ok(outcome)
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path).map(BufWriter::new).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn trace_rows(out: &RunOutcome, p_star: f64) -> Vec<Vec<String>> {
    let Some(trace) = &out.trace else {
        return Vec::new();
    };
    trace
        .records
        .iter()
        .map(|r| {
            let mut row = vec![out.label.clone(), out.seed.to_string()];
            row.extend(record_fields(r));
            row.push(format!("{:e}", r.objective_value - p_star));
            row
        })
        .collect()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn status_text(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "ok".into(),
        RunStatus::Diverged { outer_index } => format!("DIVERGED at outer loop {outer_index}"),
        RunStatus::Failed(msg) => format!("FAILED: {}", msg.replace(',', ";")),
    }
}

/// Theory report for an RBB run, evaluated with the objective's constants.
pub fn theory_report(
    obj: &dyn Objective<f64>,
    cfg: &SolverConfig<f64>,
    epsilon: f64,
    gap: Option<f64>,
) -> Option<Result<TheoryReport, String>> {
    let StepRule::Rbb { gamma, b_h, .. } = cfg.step_rule else {
        return None;
    };
    let c = obj.constants();
    let inputs = TheoryInputs {
        l: c.l,
        mu: c.mu,
        n: obj.n(),
        b: cfg.b,
        b_h,
        gamma,
        m: cfg.m,
        epsilon,
    };
    Some(TheoryReport::evaluate(inputs, gap).map_err(|e| e.to_string()))
}

fn write_reports(
    spec: &ExperimentSpec,
    obj: &dyn Objective<f64>,
    outcome: &ExperimentOutcome,
    passes_include_stepsize: bool,
) -> Result<(), HarnessError> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let reference = &outcome.reference.reference;
    let p_star = reference.value;
    let header = run_csv_header();

    let mut combined = Vec::new();
    for out in &outcome.runs {
        let rows = trace_rows(out, p_star);
        write_csv(&dir.join(format!("{}-seed{}.csv", out.label, out.seed)), &header, rows.clone())?;
        combined.extend(rows);
    }
    write_csv(&dir.join("combined.csv"), &header, combined)?;

    let gap = obj.value(&mbsarah::DenseVector::zeros(obj.dim()))? - p_star;
    for run in &spec.runs {
        write_mean_trace(dir, run, &outcome.runs, p_star, passes_include_stepsize)?;
        let cfg = run.config(obj.n(), spec.seeds[0]).map_err(HarnessError::Data)?;
        if let Some(report) = theory_report(obj, &cfg, spec.epsilon, Some(gap)) {
            let text = report.map_or_else(|e| format!("error = {e}\n"), |r| r.to_string());
            write_text(&dir.join(format!("{}.theory.txt", run.label)), &text)?;
        }
    }

    let mut summary = String::new();
    summary.push_str(&format!(
        "reference_value = {:e}\nreference_grad_norm_sq = {:e}\npasses_axis = {}\n\n",
        p_star,
        reference.grad_norm_sq,
        if passes_include_stepsize { "passes_incl_stepsize" } else { "passes" }
    ));
    summary.push_str("label,seed,status,outer_loops,passes,final_value,final_suboptimality,fallbacks\n");
    for out in &outcome.runs {
        let last = out.trace.as_ref().and_then(|t| t.final_record());
        let passes = last.map_or(String::new(), |r| {
            let p = if passes_include_stepsize { r.passes_incl_stepsize } else { r.effective_passes };
            p.to_string()
        });
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            out.label,
            out.seed,
            status_text(&out.status),
            last.map_or(0, |r| r.outer_index),
            passes,
            last.map_or(String::new(), |r| format!("{:e}", r.objective_value)),
            last.map_or(String::new(), |r| format!("{:e}", r.objective_value - p_star)),
            out.trace.as_ref().map_or(0, |t| t.total_fallbacks()),
        ));
    }
    write_text(&dir.join("summary.txt"), &summary)
}

/// Mean over the completed seeds of one run, per outer loop.
fn write_mean_trace(
    dir: &Path,
    run: &RunSpec,
    outcomes: &[RunOutcome],
    p_star: f64,
    passes_include_stepsize: bool,
) -> Result<(), HarnessError> {
    let traces: Vec<&RunTrace<f64>> = outcomes
        .iter()
        .filter(|o| o.label == run.label && o.status == RunStatus::Completed)
        .filter_map(|o| o.trace.as_ref())
        .collect();
    let header = ["outer", "passes", "value", "suboptimality", "grad_norm_sq", "seeds"];
    let mut rows = Vec::new();
    if let Some(first) = traces.first() {
        let k = traces.len() as f64;
        for (i, rec) in first.records.iter().enumerate() {
            let mean = |f: &dyn Fn(&mbsarah::TraceRecord<f64>) -> f64| traces.iter().map(|t| f(&t.records[i])).sum::<f64>() / k;
            let value = mean(&|r| r.objective_value);
            let passes = if passes_include_stepsize { rec.passes_incl_stepsize } else { rec.effective_passes };
            rows.push(vec![
                rec.outer_index.to_string(),
                passes.to_string(),
                format!("{value:e}"),
                format!("{:e}", value - p_star),
                format!("{:e}", mean(&|r| r.grad_norm_sq)),
                traces.len().to_string(),
            ]);
        }
    }
    write_csv(&dir.join(format!("{}-mean.csv", run.label)), &header, rows)
}
