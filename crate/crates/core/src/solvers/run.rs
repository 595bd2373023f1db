use super::estimators::{sarah_estimator_update, svrg_estimator};
use super::sampling::{sample_without_replacement, RunRng};
use super::trace::{InnerRecord, RunTrace, StepSummary, TraceRecord};
use super::{Method, SolverConfig, SolverError};
use crate::linalg::DenseVector;
use crate::objective::{Metered, Objective};
use crate::scalar::Real;
use crate::stepsize::{epoch_bb_step, rbb_step, StepError, StepRule};

/// Runs `cfg.method` on `obj`.
pub fn run<T, O>(obj: &O, cfg: &SolverConfig<T>) -> Result<RunTrace<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    cfg.validate(obj.n(), obj.dim())?;
    match cfg.method {
        Method::Sgd => sgd_loop(obj, cfg),
        m => variance_reduced_loop(obj, cfg, m.is_recursive()),
    }
}

fn run_family<T, O>(obj: &O, cfg: &SolverConfig<T>, family: &[Method], name: &str) -> Result<RunTrace<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    if !family.contains(&cfg.method) {
        return Err(SolverError::InvalidConfig(format!(
            "{name} cannot run method {}",
            cfg.method
        )));
    }
    run(obj, cfg)
}

/// Mini-batch SARAH with scaled RBB steps. A `Fixed` rule reduces it to
/// plain mini-batch SARAH.
pub fn run_mb_sarah_rbb<T: Real, O: Objective<T> + ?Sized>(
    obj: &O,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>, SolverError<T>> {
    run_family(obj, cfg, &[Method::MbSarahRbb, Method::MbSarahFixed], "run_mb_sarah_rbb")
}

pub fn run_ms2gd_rbb<T: Real, O: Objective<T> + ?Sized>(
    obj: &O,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>, SolverError<T>> {
    run_family(obj, cfg, &[Method::Ms2gdRbb, Method::Ms2gdFixed], "run_ms2gd_rbb")
}

pub fn run_svrg<T: Real, O: Objective<T> + ?Sized>(
    obj: &O,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>, SolverError<T>> {
    run_family(obj, cfg, &[Method::Svrg], "run_svrg")
}

pub fn run_svrg_bb<T: Real, O: Objective<T> + ?Sized>(
    obj: &O,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>, SolverError<T>> {
    run_family(obj, cfg, &[Method::SvrgBb], "run_svrg_bb")
}

pub fn run_sgd<T: Real, O: Objective<T> + ?Sized>(
    obj: &O,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>, SolverError<T>> {
    run_family(obj, cfg, &[Method::Sgd], "run_sgd")
}

fn start_trace<T, O>(obj: &O, w0: &DenseVector<T>) -> Result<RunTrace<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    Ok(RunTrace {
        records: Vec::new(),
        initial_value: obj.value(w0)?,
        initial_grad_norm_sq: obj.full_gradient(w0)?.norm_sq(),
        final_w: w0.clone(),
        total_component_grad_evals: 0,
        total_stepsize_grad_evals: 0,
        n: obj.n(),
        inner: Vec::new(),
    })
}

/// Appends the record for outer loop `outer_index` and checks for divergence.
#[allow(clippy::too_many_arguments)]
fn close_outer_loop<T, O>(
    trace: &mut RunTrace<T>,
    obj: &O,
    outer_index: usize,
    w: &DenseVector<T>,
    grad_evals: u64,
    step_evals: u64,
    steps: &[T],
    fallback_count: usize,
) -> Result<(), SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let n = obj.n() as f64;
    let value = obj.value(w)?;
    let grad_norm_sq = obj.full_gradient(w)?.norm_sq();
    trace.records.push(TraceRecord {
        outer_index,
        effective_passes: grad_evals as f64 / n,
        passes_incl_stepsize: (grad_evals + step_evals) as f64 / n,
        objective_value: value,
        grad_norm_sq,
        steps: StepSummary::of(steps),
        fallback_count,
    });
    trace.final_w = w.clone();
    trace.total_component_grad_evals = grad_evals;
    trace.total_stepsize_grad_evals = step_evals;
    if !value.is_finite() || !w.is_finite() {
        return Err(SolverError::Diverged {
            outer_index,
            value,
            trace: Box::new(std::mem::replace(trace, empty_like(trace))),
        });
    }
    Ok(())
}

fn empty_like<T: Real>(t: &RunTrace<T>) -> RunTrace<T> {
    RunTrace {
        records: Vec::new(),
        initial_value: t.initial_value,
        initial_grad_norm_sq: t.initial_grad_norm_sq,
        final_w: DenseVector::zeros(0),
        total_component_grad_evals: 0,
        total_stepsize_grad_evals: 0,
        n: t.n,
        inner: Vec::new(),
    }
}

fn inner_record<T, O>(
    obj: &O,
    outer_index: usize,
    inner_index: usize,
    w: &DenseVector<T>,
    v: &DenseVector<T>,
    eta: T,
    fallback: bool,
    curvature: Option<T>,
) -> Result<InnerRecord<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let g = obj.full_gradient(w)?;
    Ok(InnerRecord {
        outer_index,
        inner_index,
        eta,
        fallback,
        curvature,
        estimator_error_sq: g.sub(v).expect("same dimension").norm_sq(),
        estimator_norm_sq: v.norm_sq(),
    })
}

fn descend<T: Real>(w: &DenseVector<T>, eta: T, v: &DenseVector<T>) -> DenseVector<T> {
    let mut next = w.clone();
    next.axpy(-eta, v).expect("same dimension");
    next
}

fn variance_reduced_loop<T, O>(obj: &O, cfg: &SolverConfig<T>, recursive: bool) -> Result<RunTrace<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let n = obj.n();
    let grads = Metered::new(obj);
    let step_grads = Metered::new(obj);
    let mut rng = RunRng::new(cfg.seed);

    let mut snapshot = cfg.w0.clone().unwrap_or_else(|| DenseVector::zeros(obj.dim()));
    let mut trace = start_trace(obj, &snapshot)?;
    let mut last_accepted = cfg.step_rule.initial_step();
    let mut epoch_eta = cfg.step_rule.initial_step();
    let mut previous_snapshot: Option<(DenseVector<T>, DenseVector<T>)> = None;

    for s in 1..=cfg.outer_count {
        let mut steps = Vec::with_capacity(cfg.m);
        let mut fallbacks = 0usize;

        let w0 = snapshot;
        let full_grad = grads.full_gradient(&w0)?;

        if let StepRule::EpochBb { safeguard, .. } = &cfg.step_rule {
            if let Some((prev_w, prev_g)) = &previous_snapshot {
                match epoch_bb_step(&w0, prev_w, &full_grad, prev_g, cfg.m, safeguard, epoch_eta) {
                    Ok(out) => {
                        fallbacks += usize::from(out.fallback);
                        epoch_eta = out.eta;
                    }
                    Err(StepError::DegenerateStep) => fallbacks += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            previous_snapshot = Some((w0.clone(), full_grad.clone()));
        }

        let first_eta = match cfg.step_rule {
            StepRule::EpochBb { .. } => epoch_eta,
            ref rule => rule.initial_step(),
        };
        if cfg.dense_trace {
            trace
                .inner
                .push(inner_record(obj, s, 0, &w0, &full_grad, first_eta, false, None)?);
        }
        steps.push(first_eta);
        let mut w_prev = w0.clone();
        let mut w_cur = descend(&w0, first_eta, &full_grad);
        let mut v = full_grad.clone();

        for k in 1..cfg.m {
            let batch = sample_without_replacement(n, cfg.b, &mut rng.batches)?;
            v = if recursive {
                sarah_estimator_update(&v, &grads, &batch, &w_cur, &w_prev)?
            } else {
                svrg_estimator(&grads, &batch, &w_cur, &w0, &full_grad)?
            };

            let (eta, fallback, curvature) = match &cfg.step_rule {
                StepRule::Fixed { eta } => (*eta, false, None),
                StepRule::EpochBb { .. } => (epoch_eta, false, None),
                StepRule::Rbb {
                    gamma, b_h, safeguard, ..
                } => {
                    let sub = sample_without_replacement(n, *b_h, &mut rng.step_samples)?;
                    let g_cur = step_grads.minibatch_gradient(&sub, &w_cur)?;
                    let g_prev = step_grads.minibatch_gradient(&sub, &w_prev)?;
                    match rbb_step(&w_cur, &w_prev, &g_cur, &g_prev, *b_h, *gamma, safeguard, last_accepted) {
                        Ok(out) => {
                            if !out.fallback {
                                last_accepted = out.eta;
                            }
                            (out.eta, out.fallback, Some(out.curvature))
                        }
                        // stalled iterate: any step leaves it in place, keep the last one
                        Err(StepError::DegenerateStep) => (last_accepted, true, None),
                        Err(e) => return Err(e.into()),
                    }
                }
                StepRule::InverseTime { .. } => unreachable!("rejected by validation"),
            };
            fallbacks += usize::from(fallback);
            if cfg.dense_trace {
                trace
                    .inner
                    .push(inner_record(obj, s, k, &w_cur, &v, eta, fallback, curvature)?);
            }
            steps.push(eta);
            let w_next = descend(&w_cur, eta, &v);
            w_prev = std::mem::replace(&mut w_cur, w_next);
        }

        snapshot = w_cur;
        close_outer_loop(
            &mut trace,
            obj,
            s,
            &snapshot,
            grads.evals(),
            step_grads.evals(),
            &steps,
            fallbacks,
        )?;
    }
    Ok(trace)
}

fn sgd_loop<T, O>(obj: &O, cfg: &SolverConfig<T>) -> Result<RunTrace<T>, SolverError<T>>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let n = obj.n();
    let grads = Metered::new(obj);
    let mut rng = RunRng::new(cfg.seed);
    let mut w = cfg.w0.clone().unwrap_or_else(|| DenseVector::zeros(obj.dim()));
    let mut trace = start_trace(obj, &w)?;
    let mut t = 0usize;

    for s in 1..=cfg.outer_count {
        let mut steps = Vec::with_capacity(cfg.m);
        for k in 0..cfg.m {
            let batch = sample_without_replacement(n, cfg.b, &mut rng.batches)?;
            let g = grads.minibatch_gradient(&batch, &w)?;
            let eta = match cfg.step_rule {
                StepRule::Fixed { eta } => eta,
                StepRule::InverseTime { eta_0, decay } => eta_0 / (T::one() + decay * T::from_count(t)),
                _ => unreachable!("rejected by validation"),
            };
            if cfg.dense_trace {
                trace.inner.push(inner_record(obj, s, k, &w, &g, eta, false, None)?);
            }
            steps.push(eta);
            w = descend(&w, eta, &g);
            t += 1;
        }
        close_outer_loop(&mut trace, obj, s, &w, grads.evals(), 0, &steps, 0)?;
    }
    Ok(trace)
}
