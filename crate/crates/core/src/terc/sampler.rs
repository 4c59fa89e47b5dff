use super::{sub_seed, TaskDef, TercError};
use crate::dsl::{eval, Conj, StateSampler};
use crate::world::{
    collide, min_gap, perceive, Circle, Color, Config, Hand, ObjectFacts, Pose, Scene, Shape,
    ShapeClass, SymbolicState, WorldState, CELLS,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::Arc;

/// An object every sampled environment must contain. Unset fields are drawn from the pools.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Req {
    pub color: Option<Color>,
    pub shape: Option<ShapeClass>,
}

/// Task-specific acceptance rule on the selected objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    None,
    /// Everything the task moves shares one shape class.
    OneClass,
    /// The task moves exactly one object.
    Single,
    /// Areas differ by at least 20 percent.
    DistinctSizes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Pools for unconstrained attributes. `box` stands for square or rectangle.
    pub colors: Vec<Color>,
    pub shapes: Vec<ShapeClass>,
    pub required: Vec<Req>,
    /// Each present with probability one half.
    pub optional: Vec<Req>,
    /// Most objects the ground truth may move.
    pub max_moved: usize,
    pub rule: Rule,
}

const OBJECT_ATTEMPTS: usize = 500;
const LAYOUT_ATTEMPTS: usize = 300;
const POSE_ATTEMPTS: usize = 200;
const CLEARANCE: f64 = 0.03;

fn draw_shape(class: ShapeClass, rng: &mut impl Rng) -> Shape {
    match class {
        ShapeClass::Circle => Shape::Circle {
            radius: rng.gen_range(0.03..0.05),
        },
        ShapeClass::Square => {
            let s = rng.gen_range(0.05..0.08);
            Shape::Box {
                width: s,
                height: s,
            }
        }
        ShapeClass::Rectangle => {
            let w: f64 = rng.gen_range(0.04..0.09);
            let mut h = rng.gen_range(0.04..0.09);
            if (w - h).abs() < 0.02 {
                h = if w > 0.065 { w - 0.025 } else { w + 0.025 };
            }
            Shape::Box {
                width: w,
                height: h,
            }
        }
        ShapeClass::Box => {
            let c = if rng.gen_bool(0.5) {
                ShapeClass::Square
            } else {
                ShapeClass::Rectangle
            };
            draw_shape(c, rng)
        }
        ShapeClass::Triangle => Shape::Triangle {
            side: rng.gen_range(0.06..0.1),
        },
    }
}

fn facts(objects: &[(Shape, Color)]) -> Arc<Vec<ObjectFacts>> {
    Arc::new(
        objects
            .iter()
            .enumerate()
            .map(|(i, &(shape, color))| ObjectFacts {
                id: i as u32 + 1,
                color,
                shape,
                area: shape.area(),
                perimeter: shape.perimeter(),
                extent: shape.extent(),
            })
            .collect(),
    )
}

fn moved(g: &[Conj]) -> BTreeSet<u32> {
    g.iter().flat_map(|c| c.0.keys().copied()).collect()
}

/// Attribute-level checks: the program grounds, moves a bounded number of objects, and the
/// task's rule holds.
fn attributes_ok(task: &TaskDef, objects: &[(Shape, Color)]) -> bool {
    let objs = facts(objects);
    let s = SymbolicState {
        atoms: vec![CELLS[0]; objs.len()],
        objects: objs.clone(),
        hand: Hand::Empty,
    };
    let Ok(g) = eval(&task.program, &s) else {
        return false;
    };
    let ids = moved(&g);
    if ids.is_empty() || ids.len() > task.sampler.max_moved {
        return false;
    }
    match task.sampler.rule {
        Rule::None => true,
        Rule::Single => ids.len() == 1,
        Rule::OneClass => {
            let classes: BTreeSet<_> = ids
                .iter()
                .map(|id| objs[*id as usize - 1].shape.base_class())
                .collect();
            classes.len() == 1
        }
        Rule::DistinctSizes => {
            let mut a: Vec<f64> = objs.iter().map(|o| o.area).collect();
            a.sort_by(f64::total_cmp);
            a.windows(2).all(|w| w[1] >= 1.2 * w[0])
        }
    }
}

/// Draw an object set for the task: required objects, coin-flipped optional ones, and random
/// distractors from the pools, shuffled. Deterministic in `seed`.
pub fn sample_objects(task: &TaskDef, seed: u64) -> Result<Vec<(Shape, Color)>, TercError> {
    let sp = &task.sampler;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..OBJECT_ATTEMPTS {
        let mut reqs: Vec<Req> = sp.required.clone();
        for o in &sp.optional {
            if rng.gen_bool(0.5) {
                reqs.push(*o);
            }
        }
        let lo = sp.min_objects.max(reqs.len());
        let hi = sp.max_objects.max(lo);
        let n = rng.gen_range(lo..=hi);
        while reqs.len() < n {
            reqs.push(Req {
                color: None,
                shape: None,
            });
        }
        let mut objects: Vec<(Shape, Color)> = reqs
            .iter()
            .map(|r| {
                let class = r
                    .shape
                    .unwrap_or_else(|| *sp.shapes.choose(&mut rng).expect("shape pool"));
                let color = r
                    .color
                    .unwrap_or_else(|| *sp.colors.choose(&mut rng).expect("colour pool"));
                (draw_shape(class, &mut rng), color)
            })
            .collect();
        objects.shuffle(&mut rng);
        if attributes_ok(task, &objects) {
            return Ok(objects);
        }
    }
    Err(TercError::SamplerExhausted {
        task: task.id,
        attempts: OBJECT_ATTEMPTS,
    })
}

fn layout(scene: &Arc<Scene>, rng: &mut ChaCha8Rng) -> Option<WorldState> {
    let mut placed: Vec<Vec<Circle>> = Vec::new();
    let mut poses = Vec::new();
    for b in &scene.bodies {
        let lo = b.bound + 0.01;
        let mut ok = false;
        for _ in 0..POSE_ATTEMPTS {
            let p = Pose::new(
                rng.gen_range(lo..1.0 - lo),
                rng.gen_range(lo..1.0 - lo),
                0.0,
            );
            let c = b.circles_at(&p);
            if placed.iter().all(|o| min_gap(&c, o) >= CLEARANCE) {
                placed.push(c);
                poses.push(p);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    let r = scene.config.agent_radius;
    for _ in 0..POSE_ATTEMPTS {
        let (x, y) = (
            rng.gen_range(r + 0.01..1.0 - r - 0.01),
            rng.gen_range(r + 0.01..1.0 - r - 0.01),
        );
        let a = [Circle::new(x, y, r + CLEARANCE)];
        if placed.iter().all(|o| !collide(&a, o)) {
            let w = WorldState::new(scene.clone(), poses, (x, y));
            return w.validate().is_ok().then_some(w);
        }
    }
    None
}

/// No object starts where the task wants it.
fn untouched(task: &TaskDef, w: &WorldState) -> bool {
    let s = perceive(w);
    let Ok(g) = eval(&task.program, &s) else {
        return false;
    };
    g.iter().all(|c| {
        c.0.iter().all(|(id, want)| {
            let i = s.index_of(*id).expect("ids come from the scene");
            !want.is_subset(s.atoms[i])
        })
    })
}

/// Collision-free poses for a fixed object set, with no goal atom initially true.
pub fn place_objects(
    task: &TaskDef,
    objects: &[(Shape, Color)],
    seed: u64,
) -> Result<WorldState, TercError> {
    let scene = Arc::new(Scene::new(
        Config::default(),
        objects
            .iter()
            .enumerate()
            .map(|(i, &(s, c))| (i as u32 + 1, s, c))
            .collect(),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..LAYOUT_ATTEMPTS {
        if let Some(w) = layout(&scene, &mut rng) {
            if untouched(task, &w) {
                return Ok(w);
            }
        }
    }
    Err(TercError::SamplerExhausted {
        task: task.id,
        attempts: LAYOUT_ATTEMPTS,
    })
}

/// Objects and poses in one go.
pub fn sample_environment(task: &TaskDef, seed: u64) -> Result<WorldState, TercError> {
    let objects = sample_objects(task, sub_seed(seed, "objects", 0))?;
    place_objects(task, &objects, sub_seed(seed, "poses", 0))
}

/// Symbolic initial states from a task's own sampler.
pub struct TaskStates<'a>(pub &'a TaskDef);

impl StateSampler for TaskStates<'_> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SymbolicState {
        loop {
            if let Ok(w) = sample_environment(self.0, rng.gen()) {
                return perceive(&w);
            }
        }
    }
}
