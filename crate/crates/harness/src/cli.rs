//! The `mbsarah` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mbsarah::data::{fetch_dataset, FetchConfig, HttpDownloader};
use mbsarah::theory::{TheoryInputs, TheoryReport};
use mbsarah::NamedDataset;

use crate::experiment::{build_objective, load_dataset, run_experiment, RunStatus};
use crate::reference::cached_reference;
use crate::spec::ExperimentSpec;
use crate::sweep::run_sweep;
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "mbsarah", version, about = "Mini-batch SARAH with random BB steps: experiments and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Replace the spec's seed list with this single seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write reports to this directory instead of the spec's output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Scale every feature row to unit norm before building the objective.
    #[arg(long, global = true)]
    pub normalize: bool,

    /// Count step-size sub-sample gradients in the effective-pass axis.
    #[arg(long, global = true)]
    pub passes_include_stepsize: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download a named dataset (a8a, w8a, ijcnn1) into the cache.
    Fetch {
        name: String,
        /// Cache directory.
        #[arg(long, default_value = "data", value_name = "DIR")]
        cache_dir: PathBuf,
        /// File with `name.url|sha256|length = value` overrides.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Run every (run, seed) pair of a spec file and write the reports.
    Run { spec: PathBuf },
    /// Compute (or read from cache) the reference minimizer of a spec.
    Reference { spec: PathBuf },
    /// Evaluate the convergence condition, rate and complexity estimates.
    Theory {
        /// Smoothness constant L.
        #[arg(long = "L", value_name = "L")]
        l: f64,
        /// Strong convexity constant.
        #[arg(long)]
        mu: f64,
        /// Number of components.
        #[arg(long)]
        n: usize,
        /// Gradient mini-batch size.
        #[arg(long)]
        b: usize,
        /// Step-size mini-batch size.
        #[arg(long = "bH", value_name = "BH")]
        b_h: usize,
        /// Step scaling parameter.
        #[arg(long)]
        gamma: f64,
        /// Inner-loop length.
        #[arg(long)]
        m: usize,
        /// Target accuracy on the squared gradient norm.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Initial suboptimality P(w0) - P(w*), sharpens the single-loop estimate.
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Grid over b, b_H, gamma and the step size around a spec's base run.
    Sweep { spec: PathBuf },
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code: 0 on success, 1 on failure or divergence, 2 on usage errors.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn load_spec(cli: &Cli, path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(seed) = cli.seed {
        spec.seeds = vec![seed];
    }
    if let Some(dir) = &cli.output {
        spec.output_dir = dir.clone();
    }
    spec.normalize |= cli.normalize;
    Ok(spec)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, HarnessError> {
    let print = |out: &mut dyn Write, text: String| {
        let _ = out.write_all(text.as_bytes());
    };
    match &cli.command {
        Command::Fetch {
            name,
            cache_dir,
            config,
        } => {
            let name: NamedDataset = name.parse()?;
            let config = match config {
                Some(p) => FetchConfig::load(p)?,
                None => FetchConfig::default(),
            };
            let got = fetch_dataset(name, cache_dir, &config, &HttpDownloader)?;
            let how = if got.cache_hit { "cache hit" } else { "downloaded" };
            print(
                out,
                format!(
                    "{how}: {} ({} examples, {} features)\n",
                    got.path.display(),
                    got.dataset.len(),
                    got.dataset.dim()
                ),
            );
            Ok(0)
        }
        Command::Run { spec } => {
            let spec = load_spec(cli, spec)?;
            let outcome = run_experiment(&spec, cli.passes_include_stepsize)?;
            let p_star = outcome.reference.reference.value;
            for r in &outcome.runs {
                let line = match &r.status {
                    RunStatus::Completed => format!(
                        "{} seed {}: final suboptimality {:e}\n",
                        r.label,
                        r.seed,
                        r.final_suboptimality(p_star).unwrap_or(f64::NAN)
                    ),
                    RunStatus::Diverged { outer_index } => {
                        format!("{} seed {}: DIVERGED at outer loop {outer_index}\n", r.label, r.seed)
                    }
                    RunStatus::Failed(msg) => format!("{} seed {}: FAILED: {msg}\n", r.label, r.seed),
                };
                print(out, line);
            }
            print(out, format!("reports written to {}\n", outcome.output_dir.display()));
            Ok(if outcome.all_completed() { 0 } else { 1 })
        }
        Command::Reference { spec } => {
            let spec = load_spec(cli, spec)?;
            let obj = build_objective(&spec, load_dataset(&spec)?)?;
            let got = cached_reference(obj.as_ref(), &spec.reference, &spec.cache_dir)?;
            let r = &got.reference;
            print(
                out,
                format!(
                    "value = {:e}\ngrad_norm_sq = {:e}\ncache = {}\ncache_hit = {}\n",
                    r.value,
                    r.grad_norm_sq,
                    got.path.display(),
                    got.cache_hit
                ),
            );
            Ok(0)
        }
        Command::Theory {
            l,
            mu,
            n,
            b,
            b_h,
            gamma,
            m,
            epsilon,
            gap,
        } => {
            let inputs = TheoryInputs {
                l: *l,
                mu: *mu,
                n: *n,
                b: *b,
                b_h: *b_h,
                gamma: *gamma,
                m: *m,
                epsilon: *epsilon,
            };
            let report = TheoryReport::evaluate(inputs, *gap).map_err(|e| HarnessError::Data(e.to_string()))?;
            print(out, report.to_string());
            Ok(0)
        }
        Command::Sweep { spec } => {
            let spec = load_spec(cli, spec)?;
            let outcome = run_sweep(&spec, cli.passes_include_stepsize)?;
            match outcome.best_point() {
                Some(p) => print(
                    out,
                    format!(
                        "best: {} (passes to target: {}, mean final suboptimality {:e})\n",
                        p.run.label,
                        p.passes_to_target.map_or("not reached".into(), |x| x.to_string()),
                        p.final_suboptimality
                    ),
                ),
                None => print(out, "no grid point completed\n".into()),
            }
            print(out, format!("sweep written to {}\n", spec.output_dir.display()));
            Ok(0)
        }
    }
}
