//! Reference minimizer `w*` and its on-disk cache.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mbsarah::objective::Objective;
use mbsarah::{run, write_libsvm, DenseVector, SolverConfig, SolverError, StepRule};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::spec::ReferencePolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub w: DenseVector<f64>,
    pub value: f64,
    pub grad_norm_sq: f64,
    /// Effective passes spent by the solve (zero when read from cache).
    pub passes: f64,
}

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error(
        "reference solve used {passes} passes without reaching ‖∇P‖² <= {tolerance:e}; best ‖∇P‖² = {:e}",
        best.grad_norm_sq
    )]
    BudgetExhausted {
        tolerance: f64,
        passes: f64,
        best: Box<Reference>,
    },
    #[error("reference solve failed: {0}")]
    Solver(String),
    #[error("reference cache {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

impl From<SolverError<f64>> for ReferenceError {
    fn from(e: SolverError<f64>) -> Self {
        Self::Solver(e.to_string())
    }
}

/// Runs the policy's constant-step method in chunks, restarting each chunk
/// from the previous end point, until `‖∇P(w)‖² <= tolerance`.
pub fn compute_reference<O: Objective<f64> + ?Sized>(
    obj: &O,
    policy: &ReferencePolicy,
) -> Result<Reference, ReferenceError> {
    let n = obj.n();
    let eta = policy.eta.unwrap_or_else(|| 0.5 / obj.constants().l);
    let b = policy.b.min(n);
    let m = policy.m.resolve(n, b);

    let mut w = DenseVector::zeros(obj.dim());
    let mut best = Reference {
        value: obj.value(&w).map_err(SolverError::from)?,
        grad_norm_sq: obj.full_gradient(&w).map_err(SolverError::from)?.norm_sq(),
        w: w.clone(),
        passes: 0.0,
    };
    let mut passes = 0.0;
    let mut chunk = 0u64;
    while best.grad_norm_sq > policy.tolerance {
        if passes >= policy.max_passes {
            best.passes = passes;
            return Err(ReferenceError::BudgetExhausted {
                tolerance: policy.tolerance,
                passes,
                best: Box::new(best),
            });
        }
        let cfg = SolverConfig::new(policy.method, m, b, policy.chunk, StepRule::fixed(eta))
            .with_seed(policy.seed.wrapping_add(chunk))
            .with_w0(w);
        let trace = run(obj, &cfg)?;
        passes += trace.total_component_grad_evals as f64 / n as f64;
        let last = trace.final_record().expect("at least one outer loop");
        w = trace.final_w.clone();
        if last.grad_norm_sq < best.grad_norm_sq {
            best = Reference {
                w: w.clone(),
                value: last.objective_value,
                grad_norm_sq: last.grad_norm_sq,
                passes,
            };
        }
        chunk += 1;
    }
    best.passes = passes;
    Ok(best)
}

/// Content hash of (dataset bytes, objective kind, λ, tolerance).
pub fn cache_key<O: Objective<f64> + ?Sized>(obj: &O, tolerance: f64) -> String {
    let mut bytes = Vec::new();
    write_libsvm(obj.dataset(), &mut bytes).expect("writing to memory");
    let mut h = Sha256::new();
    h.update(&bytes);
    h.update(obj.dataset().dim().to_le_bytes());
    h.update(obj.kind().name().as_bytes());
    h.update(obj.lambda().to_bits().to_le_bytes());
    h.update(tolerance.to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

pub fn cache_file(cache_dir: &Path, key: &str) -> PathBuf {
    cache_dir.join(format!("reference-{key}.txt"))
}

fn serialize(r: &Reference) -> String {
    let mut s = String::new();
    writeln!(s, "value = {:e}", r.value).unwrap();
    writeln!(s, "grad_norm_sq = {:e}", r.grad_norm_sq).unwrap();
    writeln!(s, "dim = {}", r.w.len()).unwrap();
    for x in r.w.iter() {
        writeln!(s, "{x:e}").unwrap();
    }
    s
}

fn deserialize(text: &str, path: &Path) -> Result<Reference, ReferenceError> {
    let bad = |message: &str| ReferenceError::Cache {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let mut field = |key: &str| -> Result<String, ReferenceError> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        match line.split_once(" = ") {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(&format!("expected `{key} = ...`"))),
        }
    };
    let value: f64 = field("value")?.parse().map_err(|_| bad("bad value"))?;
    let grad_norm_sq: f64 = field("grad_norm_sq")?.parse().map_err(|_| bad("bad grad_norm_sq"))?;
    let dim: usize = field("dim")?.parse().map_err(|_| bad("bad dim"))?;
    let w = lines
        .map(|l| l.parse::<f64>().map_err(|_| bad("bad coordinate")))
        .collect::<Result<Vec<_>, _>>()?;
    if w.len() != dim {
        return Err(bad("coordinate count does not match dim"));
    }
    Ok(Reference {
        w: DenseVector::from_vec(w),
        value,
        grad_norm_sq,
        passes: 0.0,
    })
}

#[derive(Debug, Clone)]
pub struct CachedReference {
    pub reference: Reference,
    pub path: PathBuf,
    pub cache_hit: bool,
}

/// Returns the cached reference for this objective and tolerance, solving
/// and writing the cache on a miss.
pub fn cached_reference<O: Objective<f64> + ?Sized>(
    obj: &O,
    policy: &ReferencePolicy,
    cache_dir: &Path,
) -> Result<CachedReference, ReferenceError> {
    let path = cache_file(cache_dir, &cache_key(obj, policy.tolerance));
    let io = |e: std::io::Error| ReferenceError::Cache {
        path: path.clone(),
        message: e.to_string(),
    };
    if path.is_file() {
        let text = fs::read_to_string(&path).map_err(io)?;
        let reference = deserialize(&text, &path)?;
        if reference.w.len() == obj.dim() {
            return Ok(CachedReference {
                reference,
                path,
                cache_hit: true,
            });
        }
    }
    let reference = compute_reference(obj, policy)?;
    fs::create_dir_all(cache_dir).map_err(io)?;
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    fs::write(&tmp, serialize(&reference)).map_err(io)?;
    fs::rename(&tmp, &path).map_err(io)?;
    Ok(CachedReference {
        reference,
        path,
        cache_hit: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_round_trips_exactly() {
        let r = Reference {
            w: DenseVector::from_vec(vec![0.1, -1.0 / 3.0, 5e-300, 0.0]),
            value: std::f64::consts::LN_2,
            grad_norm_sq: 1.2345e-17,
            passes: 0.0,
        };
        let back = deserialize(&serialize(&r), Path::new("x")).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn corrupt_cache_is_reported() {
        assert!(deserialize("value = 1\n", Path::new("x")).is_err());
        assert!(deserialize("value = 1\ngrad_norm_sq = 0\ndim = 2\n1\n", Path::new("x")).is_err());
    }
}
