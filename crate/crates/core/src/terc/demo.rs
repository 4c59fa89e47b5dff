use super::{sample_environment, sub_seed, TaskDef, TercError};
use crate::dsl::{eval, satisfies};
use crate::inverse::boltzmann;
use crate::tamp::{binding_actions, solve, Binding, SolveProfile};
use crate::world::{perceive, rollout, Action, Trajectory, WorldState};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    /// Half-width of the uniform wobble added to intermediate waypoints.
    pub jitter: f64,
    /// Inverse temperature of the demonstrator's plan choice; `None` always takes the cheapest.
    pub beta_plan: Option<f64>,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Attempts after the first before giving up.
    pub retries: usize,
    pub profile: SolveProfile,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            jitter: 0.004,
            beta_plan: Some(0.05),
            min_frames: 80,
            max_frames: 120,
            retries: 10,
            profile: SolveProfile::forward(),
        }
    }
}

impl DemoConfig {
    /// Cheapest plan, no wobble.
    pub fn noise_free() -> DemoConfig {
        DemoConfig {
            jitter: 0.0,
            beta_plan: None,
            ..DemoConfig::default()
        }
    }
}

/// Demonstrations of one task in distinct environments.
#[derive(Clone, Debug)]
pub struct DemoSet {
    pub task: u32,
    pub demos: Vec<Trajectory>,
    pub env_seeds: Vec<u64>,
    pub config: DemoConfig,
}

fn count(bindings: &[Binding], spacing: f64) -> usize {
    bindings
        .iter()
        .map(|b| binding_actions(b, spacing).len())
        .sum()
}

/// Walk the bindings with waypoints spaced so the action count is as close to `frames` as
/// possible without going over, then hold still at the end. `None` when even full-speed
/// steps need more than `frames` actions.
pub fn retime(bindings: &[Binding], max_step: f64, frames: usize) -> Option<Vec<Vec<Action>>> {
    if count(bindings, max_step) > frames {
        return None;
    }
    let (mut lo, mut hi) = (max_step * 1e-3, max_step);
    if count(bindings, lo) <= frames {
        hi = lo;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if count(bindings, mid) <= frames {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let mut per: Vec<Vec<Action>> = bindings.iter().map(|b| binding_actions(b, hi)).collect();
    let total: usize = per.iter().map(Vec::len).sum();
    if let Some(last) = per.last_mut() {
        let hold = *last.last().expect("bindings emit at least one action");
        last.extend(std::iter::repeat_n(hold, frames - total));
    }
    Some(per)
}

/// One demonstration: plan, choose a plan softly, retime, wobble, and keep it only if it still
/// does the task.
pub fn generate_demo(
    task: &TaskDef,
    w0: &WorldState,
    cfg: &DemoConfig,
    seed: u64,
) -> Result<Trajectory, TercError> {
    let fail = |reason: String| TercError::DemoFailure {
        task: task.id,
        reason,
    };
    let g = eval(&task.program, &perceive(w0)).map_err(|e| fail(e.to_string()))?;
    let out =
        solve(w0, &g, &cfg.profile, sub_seed(seed, "plan", 0)).map_err(|e| fail(e.to_string()))?;
    let options: Vec<(usize, f64)> = out
        .refinements
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().map(|r| (i, r.cost)))
        .collect();
    if options.is_empty() {
        return Err(fail("no refinable plan".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "execute", 0));
    let max_step = w0.config().max_step();
    for _ in 0..=cfg.retries {
        let pick = match cfg.beta_plan {
            None => out.winner.expect("winner exists when something refined"),
            Some(beta) => {
                let costs: Vec<f64> = options.iter().map(|o| o.1).collect();
                let dist = WeightedIndex::new(boltzmann(&costs, beta)).expect("finite costs");
                options[dist.sample(&mut rng)].0
            }
        };
        let refined = out.refinements[pick].as_ref().expect("option was refined");
        let frames = rng.gen_range(cfg.min_frames..=cfg.max_frames);
        let Some(per) = retime(&refined.refinement.bindings, max_step, frames) else {
            continue;
        };
        let mut actions = Vec::with_capacity(frames);
        for mut seg in per {
            // the arrival and grip waypoints stay exact
            let fixed = seg.len().saturating_sub(2);
            for a in &mut seg[..fixed] {
                if cfg.jitter > 0.0 {
                    a.x += rng.gen_range(-cfg.jitter..=cfg.jitter);
                    a.y += rng.gen_range(-cfg.jitter..=cfg.jitter);
                }
            }
            actions.extend(seg);
        }
        let tau = rollout(w0, &actions);
        if satisfies(&task.program, &tau) == Ok(true) {
            return Ok(tau);
        }
    }
    Err(fail(format!(
        "no attempt satisfied the task in {} tries",
        cfg.retries + 1
    )))
}

/// `k` demonstrations, each in its own sampled environment.
pub fn generate_demo_set(
    task: &TaskDef,
    k: usize,
    seed: u64,
    cfg: &DemoConfig,
) -> Result<DemoSet, TercError> {
    let mut demos = Vec::with_capacity(k);
    let mut env_seeds = Vec::with_capacity(k);
    for i in 0..k as u64 {
        let env_seed = sub_seed(seed, "env", i);
        let w0 = sample_environment(task, env_seed)?;
        demos.push(generate_demo(task, &w0, cfg, sub_seed(seed, "demo", i))?);
        env_seeds.push(env_seed);
    }
    Ok(DemoSet {
        task: task.id,
        demos,
        env_seeds,
        config: cfg.clone(),
    })
}
