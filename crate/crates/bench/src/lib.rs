//! Fixtures shared by the benchmarks.

use rationale::terc::{generate_demo_set, task_by_id, DemoConfig, TaskDef};
use rationale::world::Trajectory;

/// A task and `k` noise-free demonstrations of it.
pub fn demos(task: u32, k: usize, seed: u64) -> (TaskDef, Vec<Trajectory>) {
    let t = task_by_id(task).expect("task exists");
    let set = generate_demo_set(&t, k, seed, &DemoConfig::noise_free()).expect("demos generate");
    (t, set.demos)
}
