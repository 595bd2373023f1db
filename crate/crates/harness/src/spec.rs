//! Experiment spec files.
//!
//! A spec is a TOML document with an `[experiment]` table, optional
//! `[synthetic]`, `[reference]` and `[sweep]` tables, and one `[run.<label>]`
//! table per run. Relative paths are resolved against the spec file's
//! directory. See the README for the full key list.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mbsarah::data::SyntheticSpec;
use mbsarah::stepsize::{default_gamma, SafeguardPolicy, DEFAULT_ETA0};
use mbsarah::{Method, NamedDataset, ObjectiveKind, SolverConfig, StepRule, TaskKind};
use serde::Deserialize;

use crate::HarnessError;

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_OUTER: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetChoice {
    Named(NamedDataset),
    Synthetic(SyntheticSpec),
    File { path: PathBuf, task: TaskKind },
}

/// How `m` is chosen: a constant, or `round(factor * n / b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerLength {
    Fixed(usize),
    PerEpoch(f64),
}

impl InnerLength {
    pub fn resolve(self, n: usize, b: usize) -> usize {
        match self {
            Self::Fixed(m) => m,
            Self::PerEpoch(f) => ((f * n as f64 / b as f64).round() as usize).max(1),
        }
    }
}

/// Step-size parameters as written in a run table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepParams {
    pub eta: Option<f64>,
    pub eta_0: Option<f64>,
    pub gamma: Option<f64>,
    pub b_h: Option<usize>,
    pub decay: Option<f64>,
    pub eps_denominator: Option<f64>,
    pub eta_max: Option<f64>,
    pub eta_min: Option<f64>,
}

impl StepParams {
    fn safeguard(&self) -> SafeguardPolicy<f64> {
        let d = SafeguardPolicy::default();
        SafeguardPolicy {
            eps_denominator: self.eps_denominator.unwrap_or(d.eps_denominator),
            eta_max: self.eta_max.unwrap_or(d.eta_max),
            eta_min: self.eta_min.unwrap_or(d.eta_min),
        }
    }

    /// The step rule implied by `method` and these parameters.
    pub fn rule(&self, method: Method) -> Result<StepRule<f64>, String> {
        let need_eta = || self.eta.ok_or_else(|| format!("method {method} needs `eta`"));
        let eta_0 = self.eta_0.unwrap_or(DEFAULT_ETA0);
        let rbb = |gamma_default: f64| -> Result<StepRule<f64>, String> {
            let b_h = self.b_h.ok_or_else(|| format!("method {method} needs `b_h`"))?;
            Ok(StepRule::Rbb {
                gamma: self.gamma.unwrap_or(gamma_default),
                b_h,
                eta_0,
                safeguard: self.safeguard(),
            })
        };
        Ok(match method {
            // without b_h the method runs with a constant step
            Method::MbSarahRbb if self.b_h.is_none() && self.eta.is_some() => StepRule::fixed(need_eta()?),
            Method::MbSarahRbb => rbb(default_gamma(self.b_h.unwrap_or(0)))?,
            Method::Ms2gdRbb => rbb(1.0)?,
            Method::MbSarahFixed | Method::Ms2gdFixed | Method::Svrg => StepRule::fixed(need_eta()?),
            Method::SvrgBb => StepRule::EpochBb {
                eta_0,
                safeguard: self.safeguard(),
            },
            Method::Sgd => match self.decay {
                Some(decay) => StepRule::InverseTime {
                    eta_0: need_eta()?,
                    decay,
                },
                None => StepRule::fixed(need_eta()?),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub method: Method,
    pub m: InnerLength,
    pub b: usize,
    pub outer: usize,
    pub step: StepParams,
}

impl RunSpec {
    pub fn config(&self, n: usize, seed: u64) -> Result<SolverConfig<f64>, String> {
        let rule = self.step.rule(self.method)?;
        let m = self.m.resolve(n, self.b);
        Ok(SolverConfig::new(self.method, m, self.b, self.outer, rule).with_seed(seed))
    }
}

/// Long-horizon constant-step solve that defines `w*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePolicy {
    pub method: Method,
    pub b: usize,
    pub m: InnerLength,
    /// Constant step; `0.5 / L` when `None`.
    pub eta: Option<f64>,
    /// Stop once `‖∇P(w)‖² <= tolerance`.
    pub tolerance: f64,
    /// Budget in effective passes.
    pub max_passes: f64,
    /// Outer loops between convergence checks.
    pub chunk: usize,
    pub seed: u64,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        Self {
            method: Method::MbSarahFixed,
            b: 1,
            m: InnerLength::PerEpoch(1.0),
            eta: None,
            tolerance: 1e-16,
            max_passes: 10_000.0,
            chunk: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Label of the run whose settings the grid varies.
    pub base: String,
    pub b: Vec<usize>,
    pub b_h: Vec<usize>,
    pub gamma: Vec<f64>,
    /// Values for `eta`, or for `eta_0` when the base run adapts its step.
    pub eta: Vec<f64>,
    /// Suboptimality at which passes-to-target are measured.
    pub target: f64,
}

/// `10^-3 ... 10^0`, seven log-spaced points.
pub fn default_eta_grid() -> Vec<f64> {
    (0..7).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetChoice,
    pub objective: ObjectiveKind,
    pub lambda: f64,
    pub normalize: bool,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub fetch_config: Option<PathBuf>,
    /// Target accuracy used in the theory reports.
    pub epsilon: f64,
    pub reference: ReferencePolicy,
    pub runs: Vec<RunSpec>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    experiment: RawExperiment,
    synthetic: Option<RawSynthetic>,
    reference: Option<RawReference>,
    #[serde(default)]
    run: BTreeMap<String, RawRun>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    dataset: Option<String>,
    path: Option<PathBuf>,
    task: Option<String>,
    objective: Option<String>,
    lambda: Option<f64>,
    normalize: Option<bool>,
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    fetch_config: Option<PathBuf>,
    epsilon: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    n: usize,
    d: usize,
    seed: Option<u64>,
    condition_hint: Option<f64>,
    task: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    method: Option<String>,
    b: Option<usize>,
    m: Option<usize>,
    m_factor: Option<f64>,
    eta: Option<f64>,
    tolerance: Option<f64>,
    max_passes: Option<f64>,
    chunk: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    method: String,
    m: Option<usize>,
    m_factor: Option<f64>,
    b: Option<usize>,
    outer: Option<usize>,
    eta: Option<f64>,
    eta_0: Option<f64>,
    gamma: Option<f64>,
    b_h: Option<usize>,
    decay: Option<f64>,
    eps_denominator: Option<f64>,
    eta_max: Option<f64>,
    eta_min: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    base: String,
    #[serde(default)]
    b: Vec<usize>,
    #[serde(default)]
    b_h: Vec<usize>,
    #[serde(default)]
    gamma: Vec<f64>,
    eta: Option<Vec<f64>>,
    target: Option<f64>,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    match s {
        "classification" => Ok(TaskKind::Classification),
        "regression" => Ok(TaskKind::Regression),
        other => Err(format!("unknown task {other:?}; expected classification or regression")),
    }
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    match s {
        "logistic" => Ok(ObjectiveKind::Logistic),
        "ridge" => Ok(ObjectiveKind::Ridge),
        other => Err(format!("unknown objective {other:?}; expected logistic or ridge")),
    }
}

fn inner_length(m: Option<usize>, factor: Option<f64>, default: InnerLength) -> Result<InnerLength, String> {
    match (m, factor) {
        (Some(_), Some(_)) => Err("give either `m` or `m_factor`, not both".into()),
        (Some(0), None) => Err("`m` must be at least 1".into()),
        (Some(m), None) => Ok(InnerLength::Fixed(m)),
        (None, Some(f)) if f > 0.0 && f.is_finite() => Ok(InnerLength::PerEpoch(f)),
        (None, Some(f)) => Err(format!("`m_factor` must be positive, got {f}")),
        (None, None) => Ok(default),
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|message| HarnessError::Spec {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Parses spec text; relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| e.to_string())?;
        let e = raw.experiment;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };

        let task = e.task.as_deref().map(parse_task).transpose()?;
        let dataset = match (e.dataset.as_deref(), e.path) {
            (Some(_), Some(_)) => return Err("give either `dataset` or `path`, not both".into()),
            (None, Some(p)) => DatasetChoice::File {
                path: resolve(p),
                task: task.unwrap_or_default(),
            },
            (Some("synthetic"), None) => {
                let s = raw.synthetic.ok_or("dataset = \"synthetic\" needs a [synthetic] table")?;
                DatasetChoice::Synthetic(SyntheticSpec {
                    n: s.n,
                    d: s.d,
                    seed: s.seed.unwrap_or(0),
                    condition_hint: s.condition_hint.unwrap_or(1.0),
                    task: s.task.as_deref().map(parse_task).transpose()?.unwrap_or_default(),
                })
            }
            (Some(name), None) => DatasetChoice::Named(name.parse().map_err(|e: mbsarah::FetchError| e.to_string())?),
            (None, None) => return Err("[experiment] needs `dataset` or `path`".into()),
        };

        let objective = parse_objective(e.objective.as_deref().unwrap_or("logistic"))?;
        let lambda = match (e.lambda, &dataset) {
            (Some(l), _) => l,
            (None, DatasetChoice::Named(name)) => name.lambda(),
            (None, _) => return Err("`lambda` is required unless the dataset is a named one".into()),
        };
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(format!("`lambda` must be finite and non-negative, got {lambda}"));
        }

        let seeds = e.seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
        if seeds.is_empty() {
            return Err("`seeds` must not be empty".into());
        }

        let mut reference = ReferencePolicy::default();
        if let Some(r) = raw.reference {
            if let Some(m) = r.method {
                reference.method = m.parse()?;
            }
            reference.b = r.b.unwrap_or(reference.b);
            reference.m = inner_length(r.m, r.m_factor, reference.m)?;
            reference.eta = r.eta;
            reference.tolerance = r.tolerance.unwrap_or(reference.tolerance);
            reference.max_passes = r.max_passes.unwrap_or(reference.max_passes);
            reference.chunk = r.chunk.unwrap_or(reference.chunk);
            reference.seed = r.seed.unwrap_or(reference.seed);
        }
        if !(reference.tolerance > 0.0) {
            return Err("reference `tolerance` must be positive".into());
        }
        if reference.chunk == 0 || reference.b == 0 {
            return Err("reference `chunk` and `b` must be at least 1".into());
        }

        let mut runs = Vec::with_capacity(raw.run.len());
        for (label, r) in raw.run {
            let ctx = |msg: String| format!("[run.{label}]: {msg}");
            let method: Method = r.method.parse().map_err(ctx)?;
            let b = r.b.unwrap_or(1);
            if b == 0 {
                return Err(ctx("`b` must be at least 1".into()));
            }
            let run = RunSpec {
                m: inner_length(r.m, r.m_factor, InnerLength::PerEpoch(2.0)).map_err(ctx)?,
                label: label.clone(),
                method,
                b,
                outer: r.outer.unwrap_or(DEFAULT_OUTER),
                step: StepParams {
                    eta: r.eta,
                    eta_0: r.eta_0,
                    gamma: r.gamma,
                    b_h: r.b_h,
                    decay: r.decay,
                    eps_denominator: r.eps_denominator,
                    eta_max: r.eta_max,
                    eta_min: r.eta_min,
                },
            };
            run.step.rule(method).map_err(ctx)?;
            runs.push(run);
        }
        if runs.is_empty() {
            return Err("a spec needs at least one [run.<label>] table".into());
        }

        let sweep = match raw.sweep {
            None => None,
            Some(s) => {
                if !runs.iter().any(|r| r.label == s.base) {
                    return Err(format!("[sweep] base run {:?} is not defined", s.base));
                }
                Some(SweepSpec {
                    base: s.base,
                    b: s.b,
                    b_h: s.b_h,
                    gamma: s.gamma,
                    eta: s.eta.unwrap_or_else(default_eta_grid),
                    target: s.target.unwrap_or(DEFAULT_EPSILON),
                })
            }
        };

        Ok(Self {
            dataset,
            objective,
            lambda,
            normalize: e.normalize.unwrap_or(false),
            seeds,
            output_dir: resolve(e.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            cache_dir: resolve(e.cache_dir.unwrap_or_else(|| PathBuf::from("data"))),
            fetch_config: e.fetch_config.map(resolve),
            epsilon: e.epsilon.unwrap_or(DEFAULT_EPSILON),
            reference,
            runs,
            sweep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [experiment]
        dataset = "synthetic"
        lambda = 0.01

        [synthetic]
        n = 100
        d = 5

        [run.rbb]
        method = "mb_sarah_rbb"
        b = 4
        b_h = 40
    "#;

    #[test]
    fn defaults_are_filled_in() {
        let s = ExperimentSpec::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(s.seeds, DEFAULT_SEEDS);
        assert_eq!(s.output_dir, Path::new("/base/out"));
        assert_eq!(s.objective, ObjectiveKind::Logistic);
        let run = &s.runs[0];
        assert_eq!(run.m.resolve(100, run.b), 50);
        let cfg = run.config(100, 3).unwrap();
        assert_eq!(cfg.step_rule, StepRule::rbb(40));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.outer_count, DEFAULT_OUTER);
    }

    #[test]
    fn named_dataset_supplies_lambda() {
        let text = "[experiment]\ndataset = \"ijcnn1\"\n[run.a]\nmethod = \"svrg\"\neta = 0.1\n";
        let s = ExperimentSpec::parse(text, Path::new(".")).unwrap();
        assert_eq!(s.lambda, 1e-4);
        assert_eq!(s.dataset, DatasetChoice::Named(NamedDataset::Ijcnn1));
    }

    #[test]
    fn rejects_bad_specs() {
        let cases = [
            ("[experiment]\ndataset = \"synthetic\"\nlambda = 0.1\n[run.a]\nmethod = \"svrg\"\neta = 1.0\n", "[synthetic]"),
            ("[experiment]\npath = \"x\"\nlambda = 1.0\n", "at least one"),
            ("[experiment]\npath = \"x\"\nlambda = 1.0\n[run.a]\nmethod = \"svrg\"\n", "needs `eta`"),
            ("[experiment]\npath = \"x\"\nlambda = 1.0\n[run.a]\nmethod = \"sag\"\n", "unknown method"),
            ("[experiment]\npath = \"x\"\nlambda = 1.0\n[run.a]\nmethod = \"svrg\"\neta = 1.0\nm = 3\nm_factor = 2.0\n", "not both"),
            ("[experiment]\npath = \"x\"\nlambda = 1.0\nfoo = 1\n", "foo"),
            ("[experiment]\ndataset = \"rcv1\"\n", "rcv1"),
            ("[experiment]\npath = \"x\"\n[run.a]\nmethod = \"svrg\"\neta = 1.0\n", "lambda"),
            (
                "[experiment]\npath = \"x\"\nlambda = 1.0\n[run.a]\nmethod = \"svrg\"\neta = 1.0\n[sweep]\nbase = \"b\"\n",
                "not defined",
            ),
        ];
        for (text, needle) in cases {
            let err = ExperimentSpec::parse(text, Path::new(".")).unwrap_err();
            assert!(err.contains(needle), "{err:?} should mention {needle:?}");
        }
    }

    #[test]
    fn step_rules_per_method() {
        let p = StepParams {
            eta: Some(0.2),
            b_h: Some(10),
            ..Default::default()
        };
        assert_eq!(p.rule(Method::Ms2gdRbb).unwrap().gamma(), Some(1.0));
        assert_eq!(p.rule(Method::MbSarahRbb).unwrap().gamma(), Some(0.1));
        assert_eq!(p.rule(Method::Svrg).unwrap(), StepRule::fixed(0.2));
        assert!(matches!(p.rule(Method::SvrgBb).unwrap(), StepRule::EpochBb { .. }));
        let fixed_only = StepParams {
            eta: Some(0.2),
            ..Default::default()
        };
        assert_eq!(fixed_only.rule(Method::MbSarahRbb).unwrap(), StepRule::fixed(0.2));
        let sgd = StepParams {
            eta: Some(0.5),
            decay: Some(0.1),
            ..Default::default()
        };
        assert_eq!(
            sgd.rule(Method::Sgd).unwrap(),
            StepRule::InverseTime { eta_0: 0.5, decay: 0.1 }
        );
    }

    #[test]
    fn eta_grid() {
        let g = default_eta_grid();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1.0);
        assert!(g.windows(2).all(|w| (w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12));
    }
}
