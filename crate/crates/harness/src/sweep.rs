//! Grid sweeps over `b`, `b_H`, `γ` and the step size.

use std::fmt::Write as _;
use std::fs;

use mbsarah::objective::Objective;
use mbsarah::{RunTrace, StepRule};
use rayon::prelude::*;

use crate::experiment::{build_objective, execute, load_dataset, RunStatus};
use crate::reference::cached_reference;
use crate::spec::{ExperimentSpec, RunSpec, SweepSpec};
use crate::HarnessError;

/// Effective passes at the first outer loop whose suboptimality is at most
/// `target`.
pub fn passes_to_target(trace: &RunTrace<f64>, p_star: f64, target: f64, include_stepsize: bool) -> Option<f64> {
    trace.records.iter().find(|r| r.objective_value - p_star <= target).map(|r| {
        if include_stepsize {
            r.passes_incl_stepsize
        } else {
            r.effective_passes
        }
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub run: RunSpec,
    /// Mean over seeds; `None` unless every seed reached the target.
    pub passes_to_target: Option<f64>,
    /// Mean over seeds of the final suboptimality (infinite if any seed failed).
    pub final_suboptimality: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub best: Option<usize>,
    pub reference_value: f64,
}

impl SweepOutcome {
    pub fn best_point(&self) -> Option<&SweepPoint> {
        self.best.map(|i| &self.points[i])
    }
}

fn or_keep<T: Clone>(grid: &[T], current: T) -> Vec<T> {
    if grid.is_empty() {
        vec![current]
    } else {
        grid.to_vec()
    }
}

/// Every grid variant of the sweep's base run.
pub fn grid_runs(base: &RunSpec, sweep: &SweepSpec) -> Result<Vec<RunSpec>, String> {
    let adaptive = matches!(
        base.step.rule(base.method)?,
        StepRule::Rbb { .. } | StepRule::EpochBb { .. }
    );
    let mut out = Vec::new();
    for b in or_keep(&sweep.b, base.b) {
        for b_h in or_keep(&sweep.b_h.iter().map(|&x| Some(x)).collect::<Vec<_>>(), base.step.b_h) {
            for gamma in or_keep(&sweep.gamma.iter().map(|&x| Some(x)).collect::<Vec<_>>(), base.step.gamma) {
                for &eta in &sweep.eta {
                    let mut r = base.clone();
                    r.b = b;
                    r.step.b_h = b_h;
                    r.step.gamma = gamma;
                    if adaptive {
                        r.step.eta_0 = Some(eta);
                    } else {
                        r.step.eta = Some(eta);
                    }
                    let mut label = format!("{}-b{b}", base.label);
                    if let Some(bh) = b_h {
                        write!(label, "-bh{bh}").unwrap();
                    }
                    if let Some(g) = gamma {
                        write!(label, "-g{g}").unwrap();
                    }
                    write!(label, "-eta{eta:e}").unwrap();
                    r.label = label;
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

pub fn run_sweep(spec: &ExperimentSpec, passes_include_stepsize: bool) -> Result<SweepOutcome, HarnessError> {
    let sweep = spec
        .sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Data("the spec has no [sweep] table".into()))?;
    let base = spec
        .runs
        .iter()
        .find(|r| r.label == sweep.base)
        .expect("validated when the spec was parsed");
    let ds = load_dataset(spec)?;
    let obj = build_objective(spec, ds)?;
    let p_star = cached_reference(obj.as_ref(), &spec.reference, &spec.cache_dir)?.reference.value;
    let runs = grid_runs(base, sweep).map_err(HarnessError::Data)?;
    sweep_runs(obj.as_ref(), &runs, spec, sweep.target, p_star, passes_include_stepsize)
}

fn sweep_runs(
    obj: &dyn Objective<f64>,
    runs: &[RunSpec],
    spec: &ExperimentSpec,
    target: f64,
    p_star: f64,
    include_stepsize: bool,
) -> Result<SweepOutcome, HarnessError> {
    let n = obj.n();
    let jobs: Vec<(usize, u64)> = (0..runs.len())
        .flat_map(|i| spec.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let out = execute(obj, &runs[i].label, runs[i].config(n, seed));
            let reached = out
                .trace
                .as_ref()
                .filter(|_| out.status == RunStatus::Completed)
                .and_then(|t| passes_to_target(t, p_star, target, include_stepsize));
            let fin = match out.status {
                RunStatus::Completed => out.final_suboptimality(p_star).unwrap_or(f64::INFINITY),
                _ => f64::INFINITY,
            };
            (i, seed, out.status, fin, reached)
        })
        .collect();

    let mut csv = String::from("label,b,b_h,gamma,eta,eta_0,seed,status,final_suboptimality,passes_to_target\n");
    let opt = |x: Option<String>| x.unwrap_or_default();
    for (i, seed, status, fin, reached) in &results {
        let r = &runs[*i];
        let status = match status {
            RunStatus::Completed => "ok".to_string(),
            RunStatus::Diverged { .. } => "diverged".to_string(),
            RunStatus::Failed(_) => "failed".to_string(),
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{:e},{}",
            r.label,
            r.b,
            opt(r.step.b_h.map(|x| x.to_string())),
            opt(r.step.gamma.map(|x| x.to_string())),
            opt(r.step.eta.map(|x| format!("{x:e}"))),
            opt(r.step.eta_0.map(|x| format!("{x:e}"))),
            seed,
            status,
            fin,
            opt(reached.map(|x| x.to_string())),
        )
        .unwrap();
    }

    let k = spec.seeds.len() as f64;
    let points: Vec<SweepPoint> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mine: Vec<_> = results.iter().filter(|x| x.0 == i).collect();
            let reached: Option<Vec<f64>> = mine.iter().map(|x| x.4).collect();
            SweepPoint {
                run: r.clone(),
                passes_to_target: reached.map(|v| v.iter().sum::<f64>() / k),
                final_suboptimality: mine.iter().map(|x| x.3).sum::<f64>() / k,
            }
        })
        .collect();

    let key = |p: &SweepPoint| (p.passes_to_target.unwrap_or(f64::INFINITY), p.final_suboptimality);
    let best = (0..points.len())
        .filter(|&i| points[i].final_suboptimality.is_finite())
        .min_by(|&a, &b| key(&points[a]).partial_cmp(&key(&points[b])).expect("no NaN keys"));

    let dir = &spec.output_dir;
    let io = |source| HarnessError::Io {
        path: dir.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("sweep.csv"), csv).map_err(io)?;
    let mut best_text = format!("target = {target:e}\nreference_value = {p_star:e}\n");
    match best {
        Some(i) => {
            let p = &points[i];
            writeln!(best_text, "best = {}", p.run.label).unwrap();
            writeln!(
                best_text,
                "passes_to_target = {}",
                p.passes_to_target.map_or("not reached".into(), |x| x.to_string())
            )
            .unwrap();
            writeln!(best_text, "final_suboptimality = {:e}", p.final_suboptimality).unwrap();
        }
        None => best_text.push_str("best = none\n"),
    }
    fs::write(dir.join("sweep-best.txt"), best_text).map_err(io)?;

    Ok(SweepOutcome {
        points,
        best,
        reference_value: p_star,
    })
}
