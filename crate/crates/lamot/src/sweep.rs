//! λ × seed sweeps spread over worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use lamot_core::latency::LatencyModel;
use lamot_core::nas::{sweep_point, Evaluator, NasError, ParetoPoint, SearchSpace, SweepBudget};

/// One sweep task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepTask {
    pub seed: u64,
    pub lambda: f64,
}

/// Seed-major cross product of `seeds` and `lambdas`.
pub fn sweep_tasks(seeds: &[u64], lambdas: &[f64]) -> Vec<SweepTask> {
    seeds
        .iter()
        .flat_map(|&seed| lambdas.iter().map(move |&lambda| SweepTask { seed, lambda }))
        .collect()
}

/// Runs every task on up to `jobs` threads. Results come back in task
/// order, so the output does not depend on `jobs`.
pub fn run_tasks(
    space: &SearchSpace,
    evaluator: &(dyn Evaluator + Sync),
    model: &LatencyModel,
    tasks: &[SweepTask],
    budget: &SweepBudget,
    jobs: usize,
) -> Vec<Result<ParetoPoint, NasError>> {
    let jobs = jobs.clamp(1, tasks.len().max(1));
    let slots: Vec<Mutex<Option<Result<ParetoPoint, NasError>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(task) = tasks.get(i) else { break };
        let r = sweep_point(space, evaluator, model, task.lambda, budget, task.seed);
        *slots[i].lock().expect("slot lock") = Some(r);
    };
    if jobs == 1 {
        work();
    } else {
        thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(work);
            }
        });
    }
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every task ran"))
        .collect()
}

/// Successful points in task order; failures are logged and skipped.
pub fn parallel_sweep(
    space: &SearchSpace,
    evaluator: &(dyn Evaluator + Sync),
    model: &LatencyModel,
    tasks: &[SweepTask],
    budget: &SweepBudget,
    jobs: usize,
) -> Result<Vec<ParetoPoint>, NasError> {
    if tasks.is_empty() {
        return Err(NasError::EmptyLambdas);
    }
    let mut out = Vec::with_capacity(tasks.len());
    for (task, r) in tasks.iter().zip(run_tasks(space, evaluator, model, tasks, budget, jobs)) {
        match r {
            Ok(p) => out.push(p),
            Err(e) => log::warn!("skipping lambda={} seed={}: {e}", task.lambda, task.seed),
        }
    }
    Ok(out)
}
