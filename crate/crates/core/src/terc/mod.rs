//! The task corpus: thirty-five ground-truth goal programs with environment samplers, a
//! seeded demonstrator that plans, picks a plan softly and executes it with some wobble, and
//! the comprehension and success scoring used to judge inferred programs.

mod demo;
mod evaluate;
mod sampler;

pub use demo::{generate_demo, generate_demo_set, retime, DemoConfig, DemoSet};
pub use evaluate::{binomial_se, evaluate, summarize, EvalParams, EvalReport, Rate, TaskEval};
pub use sampler::{
    place_objects, sample_environment, sample_objects, Req, Rule, SamplerSpec, TaskStates,
};

use crate::dsl::Program;
use crate::world::{Color, ShapeClass};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub id: u32,
    pub description: String,
    pub program: Program,
    pub difficulty: Difficulty,
    pub sampler: SamplerSpec,
}

impl TaskDef {
    /// Demonstration counts the task is evaluated with. Hard tasks are three-shot only.
    pub fn shots(&self) -> &'static [usize] {
        match self.difficulty {
            Difficulty::Easy => &[1, 3],
            Difficulty::Hard => &[3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error, Serialize, Deserialize)]
pub enum TercError {
    #[error("unknown task {0}")]
    UnknownTask(u32),
    #[error("sampler for task {task} gave up after {attempts} attempts")]
    SamplerExhausted { task: u32, attempts: usize },
    #[error("demonstration for task {task} failed: {reason}")]
    DemoFailure { task: u32, reason: String },
}

/// Independent stream seed for `(seed, tag, index)`.
pub fn sub_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

use Color::*;
use ShapeClass as K;

const ANY_COLOR: [Color; 7] = Color::ALL;
const ANY_SHAPE: [ShapeClass; 4] = [K::Circle, K::Square, K::Rectangle, K::Triangle];

fn req(color: Option<Color>, shape: Option<ShapeClass>) -> Req {
    Req { color, shape }
}

fn spec(required: Vec<Req>, max_moved: usize) -> SamplerSpec {
    SamplerSpec {
        min_objects: 3,
        max_objects: 5,
        colors: ANY_COLOR.to_vec(),
        shapes: ANY_SHAPE.to_vec(),
        required,
        optional: Vec::new(),
        max_moved,
        rule: Rule::None,
    }
}

fn task(id: u32, description: &str, program: &str, sampler: SamplerSpec) -> TaskDef {
    TaskDef {
        id,
        description: description.to_string(),
        program: Program::parse(program).expect("corpus programs parse"),
        difficulty: if id <= 25 {
            Difficulty::Easy
        } else {
            Difficulty::Hard
        },
        sampler,
    }
}

/// The full corpus, ids 1 to 35.
pub fn tasks() -> Vec<TaskDef> {
    let red_circle = req(Some(Red), Some(K::Circle));
    let circle = req(None, Some(K::Circle));
    let boxed = req(None, Some(K::Box));
    let triangle = req(None, Some(K::Triangle));
    let green = req(Some(Green), None);
    let blue = req(Some(Blue), None);
    let red = req(Some(Red), None);
    vec![
        task(1, "Move the red circle to the top-right corner",
            "(achieve (for (filter (and (color red) (shape circle))) (at Right Top Corner)))",
            spec(vec![red_circle], 1)),
        task(2, "Put every circle in the middle",
            "(achieve (for (filter (shape circle)) (at Middle)))",
            spec(vec![circle], 2)),
        task(3, "Place the green boxes at the bottom",
            "(achieve (for (filter (and (color green) (shape box))) (at Bottom)))",
            spec(vec![req(Some(Green), Some(K::Box))], 2)),
        task(4, "Bring all the triangles to the left",
            "(achieve (for (filter (shape triangle)) (at Left)))",
            spec(vec![triangle], 2)),
        task(5, "Put the circles in the corners",
            "(achieve (for (filter (shape circle)) (at Corner)))",
            spec(vec![circle], 2)),
        task(6, "Put every box on the left",
            "(achieve (for (filter (shape box)) (at Left)))",
            spec(vec![boxed], 2)),
        task(7, "Place all the pink shapes in the middle",
            "(achieve (for (filter (color pink)) (at Middle)))",
            spec(vec![req(Some(Pink), None)], 2)),
        task(8, "Place all green objects at the top",
            "(achieve (for (filter (color green)) (at Top)))",
            spec(vec![green], 2)),
        task(9, "Move all the triangles to the bottom-left",
            "(achieve (for (filter (shape triangle)) (at Left Bottom)))",
            spec(vec![triangle], 2)),
        task(10, "Move all the red objects to the bottom-left corner",
            "(achieve (for (filter (color red)) (at Left Bottom Corner)))",
            spec(vec![red], 1)),
        task(11, "Move the green box to the bottom-right corner",
            "(achieve (for (filter (and (color green) (shape box))) (at Right Bottom Corner)))",
            spec(vec![req(Some(Green), Some(K::Box))], 1)),
        task(12, "Place the orange triangle in the bottom-right corner",
            "(achieve (for (filter (and (color orange) (shape triangle))) (at Right Bottom Corner)))",
            spec(vec![req(Some(Orange), Some(K::Triangle))], 1)),
        task(13, "Place the green objects on the left and the blue objects on the right",
            "(achieve (for (filter (color green)) (at Left)) (for (filter (color blue)) (at Right)))",
            spec(vec![green, blue], 3)),
        task(14, "Move all the squares to the top-left",
            "(achieve (for (filter (shape square)) (at Left Top)))",
            spec(vec![req(None, Some(K::Square))], 2)),
        task(15, "Move the yellow triangle to the top-right",
            "(achieve (for (filter (and (color yellow) (shape triangle))) (at Right Top)))",
            spec(vec![req(Some(Yellow), Some(K::Triangle))], 1)),
        task(16, "Move all the purple objects to the top-left corner",
            "(achieve (for (filter (color purple)) (at Left Top Corner)))",
            spec(vec![req(Some(Purple), None)], 1)),
        task(17, "Move every object except the yellow one to the bottom",
            "(achieve (for (except all (filter (color yellow))) (at Bottom)))",
            SamplerSpec { max_objects: 4, ..spec(vec![req(Some(Yellow), None)], 3) }),
        task(18, "Move the orange box to the bottom-left corner",
            "(achieve (for (filter (and (color orange) (shape box))) (at Left Bottom Corner)))",
            spec(vec![req(Some(Orange), Some(K::Box))], 1)),
        task(19, "Move the largest circle to the bottom-right corner",
            "(achieve (for (largest area (filter (shape circle))) (at Right Bottom Corner)))",
            spec(vec![circle, circle], 1)),
        task(20, "Move the smallest object to the centre",
            "(achieve (for (smallest area all) (at Middle)))",
            spec(vec![], 1)),
        task(21, "Move the largest box to the bottom-left",
            "(achieve (for (largest area (filter (shape box))) (at Left Bottom)))",
            spec(vec![boxed, boxed], 1)),
        task(22, "Move the purple square to the top-left corner",
            "(achieve (for (filter (and (color purple) (shape square))) (at Left Top Corner)))",
            spec(vec![req(Some(Purple), Some(K::Square))], 1)),
        task(23, "Move the largest blue or green circle to the left",
            "(achieve (for (largest area (filter (and (shape circle) (or (color green) (color blue))))) (at Left)))",
            spec(vec![req(Some(Blue), Some(K::Circle)), req(Some(Green), Some(K::Circle))], 1)),
        task(24, "Move the largest yellow or green box to the top-right",
            "(achieve (for (largest area (filter (and (shape box) (or (color green) (color yellow))))) (at Right Top)))",
            spec(vec![req(Some(Yellow), Some(K::Box)), req(Some(Green), Some(K::Box))], 1)),
        task(25, "Move green objects left, and blue objects to the right",
            "(achieve (for (filter (color green)) (at Left)) (for (filter (color blue)) (at Right)))",
            spec(vec![green, blue], 3)),
        task(26, "Put the boxes at the top-left, then put the circles at the bottom-right",
            "(seq (achieve (for (filter (shape box)) (at Left Top))) (achieve (for (filter (shape circle)) (at Right Bottom))))",
            spec(vec![boxed, circle], 3)),
        task(27, "First move all the circles to the top, then put everything else on the bottom",
            "(seq (achieve (for (filter (shape circle)) (at Top))) (achieve (for (except all (filter (shape circle))) (at Bottom))))",
            SamplerSpec { max_objects: 4, ..spec(vec![circle, req(None, Some(K::Box))], 3) }),
        task(28, "First move all the rectangles to the left, then move all the squares to the right",
            "(seq (achieve (for (filter (shape rectangle)) (at Left))) (achieve (for (filter (shape square)) (at Right))))",
            spec(vec![req(None, Some(K::Rectangle)), req(None, Some(K::Square))], 3)),
        task(29, "Move the red objects to the right, then move the green objects to the left",
            "(seq (achieve (for (filter (color red)) (at Right))) (achieve (for (filter (color green)) (at Left))))",
            spec(vec![red, green], 3)),
        task(30, "First move the largest triangle to the top-right, then move the other triangles to the bottom-left",
            "(seq (achieve (for (largest area (filter (shape triangle))) (at Right Top))) (achieve (for (except (filter (shape triangle)) (largest area (filter (shape triangle)))) (at Left Bottom))))",
            spec(vec![triangle, triangle], 3)),
        task(31, "Put the objects of the most common shape on the left",
            "(achieve (for (most-numerous-shape all) (at Left)))",
            SamplerSpec {
                min_objects: 4,
                shapes: vec![K::Circle, K::Box, K::Triangle],
                rule: Rule::OneClass,
                ..spec(vec![], 3)
            }),
        task(32, "Put the odd-one-out by colour at the top-right corner",
            "(achieve (for (odd-color all) (at Right Top Corner)))",
            SamplerSpec {
                min_objects: 3,
                max_objects: 4,
                colors: vec![Red, Blue],
                rule: Rule::Single,
                ..spec(vec![], 1)
            }),
        task(33, "If there is a triangle, move the circles to the top-right; otherwise move the boxes there",
            "(if (exists (filter (shape triangle))) (achieve (for (filter (shape circle)) (at Right Top))) (achieve (for (filter (shape box)) (at Right Top))))",
            SamplerSpec {
                shapes: vec![K::Circle, K::Square, K::Rectangle],
                optional: vec![triangle],
                ..spec(vec![circle, boxed], 2)
            }),
        task(34, "If the pink triangle exists, move it to the top-left corner; otherwise move the pink circle there",
            "(if (exists (filter (and (color pink) (shape triangle)))) (achieve (for (filter (and (color pink) (shape triangle))) (at Left Top Corner))) (achieve (for (filter (and (color pink) (shape circle))) (at Left Top Corner))))",
            SamplerSpec {
                colors: vec![Red, Green, Blue, Yellow, Purple, Orange],
                optional: vec![req(Some(Pink), Some(K::Triangle))],
                ..spec(vec![req(Some(Pink), Some(K::Circle))], 1)
            }),
        task(35, "Sort the three objects by size: largest top-left, medium centre, smallest bottom-right",
            "(sort-by area desc all (at Left Top) (at Middle) (at Right Bottom))",
            SamplerSpec {
                min_objects: 3,
                max_objects: 3,
                rule: Rule::DistinctSizes,
                ..spec(vec![], 3)
            }),
    ]
}

pub fn task_by_id(id: u32) -> Result<TaskDef, TercError> {
    tasks()
        .into_iter()
        .find(|t| t.id == id)
        .ok_or(TercError::UnknownTask(id))
}

/// Easy tasks ordered by ground-truth size, then id.
pub fn simplest_easy(n: usize) -> Vec<TaskDef> {
    let mut easy: Vec<TaskDef> = tasks()
        .into_iter()
        .filter(|t| t.difficulty == Difficulty::Easy)
        .collect();
    easy.sort_by_key(|t| (t.program.size(), t.id));
    easy.truncate(n);
    easy
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u32,
    pub description: String,
    pub difficulty: Difficulty,
    pub program: Program,
    pub size: usize,
    pub sampler: SamplerSpec,
}

/// Corpus listing for tooling.
pub fn corpus_manifest() -> Vec<ManifestEntry> {
    tasks()
        .into_iter()
        .map(|t| ManifestEntry {
            id: t.id,
            size: t.program.size(),
            description: t.description,
            difficulty: t.difficulty,
            program: t.program,
            sampler: t.sampler,
        })
        .collect()
}

#[cfg(test)]
mod tests;
