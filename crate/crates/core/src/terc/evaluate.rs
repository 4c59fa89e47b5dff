use super::{place_objects, sample_objects, sub_seed, TaskDef};
use crate::dsl::{eval, extensional_equiv, satisfies, BroadSampler, Program};
use crate::tamp::{solve, SolveProfile};
use crate::world::perceive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Fresh object sets.
    pub envs: usize,
    /// Pose draws per object set.
    pub poses: usize,
    pub seed: u64,
    /// Random states per equivalence check.
    pub equiv_samples: usize,
    pub profile: SolveProfile,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            envs: 3,
            poses: 5,
            seed: 0,
            equiv_samples: 50,
            profile: SolveProfile::forward(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskEval {
    pub task: u32,
    pub map: Option<Program>,
    pub top1: bool,
    pub top5: bool,
    pub top10: bool,
    pub successes: usize,
    pub rollouts: usize,
    pub success_rate: f64,
    pub success_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: usize,
    pub n: usize,
    pub rate: f64,
    pub se: f64,
}

impl Rate {
    pub fn new(hits: usize, n: usize) -> Rate {
        let rate = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        Rate {
            hits,
            n,
            rate,
            se: binomial_se(rate, n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: Vec<TaskEval>,
    pub top1: Rate,
    pub top5: Rate,
    pub top10: Rate,
    /// Pooled over every rollout of every task.
    pub success: Rate,
}

/// `sqrt(p (1 - p) / n)`; zero for an empty sample.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Score a ranked hypothesis list against a task. Comprehension at `k` asks whether any of
/// the first `k` programs grounds like the truth on random states; success runs the top
/// program through the planner in fresh environments and checks the truth on the result.
pub fn evaluate(ranked: &[Program], task: &TaskDef, params: &EvalParams) -> TaskEval {
    let sampler = BroadSampler::default();
    let equiv_seed = sub_seed(params.seed, "equiv", task.id as u64);
    let hit: Vec<bool> = ranked
        .iter()
        .take(10)
        .map(|p| extensional_equiv(p, &task.program, &sampler, params.equiv_samples, equiv_seed))
        .collect();
    let top = |k: usize| hit.iter().take(k).any(|&h| h);
    let map = ranked.first().cloned();
    let runs: Vec<(usize, usize)> = (0..params.envs)
        .flat_map(|e| (0..params.poses).map(move |p| (e, p)))
        .collect();
    let successes = match &map {
        None => 0,
        Some(e) => runs
            .par_iter()
            .filter(|&&(env, pose)| rollout_succeeds(e, task, params, env, pose))
            .count(),
    };
    let rollouts = runs.len();
    let rate = Rate::new(successes, rollouts);
    TaskEval {
        task: task.id,
        map,
        top1: top(1),
        top5: top(5),
        top10: top(10),
        successes,
        rollouts,
        success_rate: rate.rate,
        success_se: rate.se,
    }
}

fn rollout_succeeds(
    e: &Program,
    task: &TaskDef,
    params: &EvalParams,
    env: usize,
    pose: usize,
) -> bool {
    let Ok(objects) = sample_objects(task, sub_seed(params.seed, "eval-objects", env as u64))
    else {
        return false;
    };
    let pose_seed = sub_seed(
        params.seed,
        "eval-poses",
        (env * params.poses + pose) as u64,
    );
    let Ok(w0) = place_objects(task, &objects, pose_seed) else {
        return false;
    };
    let Ok(g) = eval(e, &perceive(&w0)) else {
        return false;
    };
    let Ok(out) = solve(&w0, &g, &params.profile, sub_seed(pose_seed, "solve", 0)) else {
        return false;
    };
    match out.best() {
        Some((_, r)) => satisfies(&task.program, &r.trajectory) == Ok(true),
        None => false,
    }
}

pub fn summarize(tasks: Vec<TaskEval>) -> EvalReport {
    let n = tasks.len();
    let count = |f: fn(&TaskEval) -> bool| tasks.iter().filter(|t| f(t)).count();
    let top1 = Rate::new(count(|t| t.top1), n);
    let top5 = Rate::new(count(|t| t.top5), n);
    let top10 = Rate::new(count(|t| t.top10), n);
    let success = Rate::new(
        tasks.iter().map(|t| t.successes).sum(),
        tasks.iter().map(|t| t.rollouts).sum(),
    );
    EvalReport {
        tasks,
        top1,
        top5,
        top10,
        success,
    }
}
