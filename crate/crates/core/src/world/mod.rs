//! Deterministic top-down pick-and-place world.
//!
//! Objects are rigid circles, boxes and triangles inside the unit square, approximated by
//! circle decompositions for collision checking. The agent is a small disc that can carry one
//! object at a time. Perception maps a continuous state to `At(object, region)` facts.

mod geometry;
pub mod io;
mod regions;
pub mod svg;

pub use geometry::{
    bounding_radius, collide, decompose, min_gap, overshoot, resolution_for, Circle, Shape,
    ShapeClass,
};
pub use regions::{realizable, sampling_boxes, Region, RegionSet, CELLS};

use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Plumbing constants shared by the simulator, perception and the planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Agent speed limit, units per second.
    pub v_max: f64,
    /// Timestep in seconds.
    pub dt: f64,
    /// Largest agent-to-object gap at which closing the gripper attaches the object.
    pub eps_grasp: f64,
    /// Allowed reach of a decomposition past the true outline.
    pub eps_cover: f64,
    /// Pose perturbation below which perception must not change away from region boundaries.
    pub delta_pose: f64,
    pub r_middle: f64,
    pub r_corner: f64,
    pub agent_radius: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            v_max: 0.5,
            dt: 0.1,
            eps_grasp: 0.03,
            eps_cover: 0.005,
            delta_pose: 0.01,
            r_middle: 0.15,
            r_corner: 0.15,
            agent_radius: 0.02,
        }
    }
}

impl Config {
    /// Longest distance the agent covers in one step.
    pub fn max_step(&self) -> f64 {
        self.v_max * self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Orange,
    Pink,
}

impl Color {
    pub const ALL: [Color; 7] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Purple,
        Color::Orange,
        Color::Pink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Purple => "purple",
            Color::Orange => "orange",
            Color::Pink => "pink",
        }
    }

    pub fn parse(s: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn hex(self) -> &'static str {
        match self {
            Color::Red => "#d62728",
            Color::Green => "#2ca02c",
            Color::Blue => "#1f77b4",
            Color::Yellow => "#e6c619",
            Color::Purple => "#9467bd",
            Color::Orange => "#ff7f0e",
            Color::Pink => "#f07ab5",
        }
    }
}

/// Object identifier, unique within a scene.
pub type ObjId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta }
    }
}

/// The static part of an object: identity, appearance and its local circle decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub id: ObjId,
    pub shape: Shape,
    pub color: Color,
    pub local: Vec<Circle>,
    /// Radius of a disc around the centroid containing the whole decomposition.
    pub bound: f64,
}

impl Body {
    pub fn new(id: ObjId, shape: Shape, color: Color, cfg: &Config) -> Body {
        let local = decompose(&shape, resolution_for(&shape, cfg.eps_cover));
        let bound = bounding_radius(0.0, 0.0, &local);
        Body {
            id,
            shape,
            color,
            local,
            bound,
        }
    }

    pub fn circles_at(&self, pose: &Pose) -> Vec<Circle> {
        self.local
            .iter()
            .map(|c| c.placed(pose.x, pose.y, pose.theta))
            .collect()
    }
}

/// Immutable object table shared by every state of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub config: Config,
    pub bodies: Vec<Body>,
}

impl Scene {
    pub fn new(config: Config, objects: Vec<(ObjId, Shape, Color)>) -> Scene {
        let bodies = objects
            .into_iter()
            .map(|(id, s, c)| Body::new(id, s, c, &config))
            .collect();
        Scene { config, bodies }
    }

    pub fn index_of(&self, id: ObjId) -> Option<usize> {
        self.bodies.iter().position(|b| b.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Held {
    /// Index into the scene's bodies.
    pub index: usize,
    /// Object position minus agent position, fixed while held.
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Last commanded gripper bit.
    pub grip: bool,
    pub held: Option<Held>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub x: f64,
    pub y: f64,
    pub grip: bool,
}

impl Action {
    pub const fn new(x: f64, y: f64, grip: bool) -> Self {
        Action { x, y, grip }
    }
}

#[derive(Clone, Debug)]
pub struct WorldState {
    pub scene: Arc<Scene>,
    pub poses: Vec<Pose>,
    pub agent: AgentState,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.scene, &other.scene) || self.scene == other.scene)
            && self.poses == other.poses
            && self.agent == other.agent
    }
}

/// Why a state is not a valid world.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("object {0} has an invalid shape")]
    BadShape(ObjId),
    #[error("duplicate object id {0}")]
    DuplicateId(ObjId),
    #[error("object {0} lies outside the workspace")]
    OutOfBounds(ObjId),
    #[error("objects {0} and {1} overlap")]
    Overlap(ObjId, ObjId),
    #[error("agent overlaps object {0}")]
    AgentOverlap(ObjId),
    #[error("agent lies outside the workspace")]
    AgentOutOfBounds,
    #[error("pose count does not match object count")]
    PoseCount,
}

/// True iff every circle lies strictly inside the unit square.
pub fn inside_bounds(circles: &[Circle]) -> bool {
    circles
        .iter()
        .all(|c| c.x - c.r > 0.0 && c.x + c.r < 1.0 && c.y - c.r > 0.0 && c.y + c.r < 1.0)
}

impl WorldState {
    pub fn new(scene: Arc<Scene>, poses: Vec<Pose>, agent_xy: (f64, f64)) -> WorldState {
        WorldState {
            scene,
            poses,
            agent: AgentState {
                x: agent_xy.0,
                y: agent_xy.1,
                grip: false,
                held: None,
            },
        }
    }

    pub fn config(&self) -> &Config {
        &self.scene.config
    }

    pub fn n_objects(&self) -> usize {
        self.poses.len()
    }

    pub fn object_circles(&self, i: usize) -> Vec<Circle> {
        self.scene.bodies[i].circles_at(&self.poses[i])
    }

    pub fn agent_circle(&self) -> Circle {
        Circle::new(self.agent.x, self.agent.y, self.config().agent_radius)
    }

    pub fn held_index(&self) -> Option<usize> {
        self.agent.held.map(|h| h.index)
    }

    /// Check the world invariants: valid shapes, unique ids, everything in bounds and no overlaps.
    pub fn validate(&self) -> Result<(), WorldError> {
        let bodies = &self.scene.bodies;
        if bodies.len() != self.poses.len() {
            return Err(WorldError::PoseCount);
        }
        for (i, b) in bodies.iter().enumerate() {
            if !b.shape.is_valid() {
                return Err(WorldError::BadShape(b.id));
            }
            if bodies[..i].iter().any(|o| o.id == b.id) {
                return Err(WorldError::DuplicateId(b.id));
            }
        }
        let circles: Vec<Vec<Circle>> = (0..bodies.len()).map(|i| self.object_circles(i)).collect();
        for (i, ci) in circles.iter().enumerate() {
            if !inside_bounds(ci) {
                return Err(WorldError::OutOfBounds(bodies[i].id));
            }
            for j in (i + 1)..circles.len() {
                if collide(ci, &circles[j]) {
                    return Err(WorldError::Overlap(bodies[i].id, bodies[j].id));
                }
            }
        }
        let agent = [self.agent_circle()];
        if !inside_bounds(&agent) {
            return Err(WorldError::AgentOutOfBounds);
        }
        for (i, ci) in circles.iter().enumerate() {
            if Some(i) != self.held_index() && collide(&agent, ci) {
                return Err(WorldError::AgentOverlap(bodies[i].id));
            }
        }
        Ok(())
    }

    /// Gap between the agent disc and object `i`'s decomposition.
    pub fn agent_gap(&self, i: usize) -> f64 {
        min_gap(&[self.agent_circle()], &self.object_circles(i))
    }

    /// Whether the agent (and its load) would be collision-free with the agent at `(x, y)`.
    pub fn agent_free_at(&self, x: f64, y: f64) -> bool {
        let r = self.config().agent_radius;
        let mut moving = vec![Circle::new(x, y, r)];
        let held = self.agent.held;
        if let Some(h) = held {
            let b = &self.scene.bodies[h.index];
            let th = self.poses[h.index].theta;
            moving.extend(b.local.iter().map(|c| c.placed(x + h.dx, y + h.dy, th)));
        }
        if !inside_bounds(&moving) {
            return false;
        }
        for (i, b) in self.scene.bodies.iter().enumerate() {
            if Some(i) == held.map(|h| h.index) {
                continue;
            }
            let p = &self.poses[i];
            // cheap reject on bounding discs first
            let reach = b.bound
                + r
                + held.map_or(0.0, |h| {
                    (h.dx * h.dx + h.dy * h.dy).sqrt() + self.scene.bodies[h.index].bound
                });
            if (p.x - x).powi(2) + (p.y - y).powi(2) > reach * reach {
                continue;
            }
            if collide(&moving, &b.circles_at(p)) {
                return false;
            }
        }
        true
    }
}

/// Advance the world by one timestep.
///
/// The agent heads for the waypoint at no more than `v_max * dt`, stopping short of first
/// contact. Afterwards a 0->1 grip transition attaches the nearest object within `eps_grasp`
/// and a 1->0 transition releases the load.
pub fn step(w: &WorldState, a: &Action) -> WorldState {
    let cfg = w.config().clone();
    let mut next = w.clone();
    let (x0, y0) = (w.agent.x, w.agent.y);
    let (mut dx, mut dy) = (a.x - x0, a.y - y0);
    let dist = (dx * dx + dy * dy).sqrt();
    let max_step = cfg.max_step();
    if dist > max_step * (1.0 + 1e-9) {
        dx *= max_step / dist;
        dy *= max_step / dist;
    }
    if dist > 0.0 {
        let f = free_fraction(w, dx, dy);
        let (nx, ny) = if f >= 1.0 && dist <= max_step * (1.0 + 1e-9) {
            // land exactly on the waypoint when it is within reach
            (a.x, a.y)
        } else {
            (x0 + f * dx, y0 + f * dy)
        };
        next.agent.x = nx;
        next.agent.y = ny;
        if let Some(h) = next.agent.held {
            next.poses[h.index].x = nx + h.dx;
            next.poses[h.index].y = ny + h.dy;
        }
    }
    match (w.agent.grip, a.grip) {
        (false, true) => {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..next.n_objects() {
                let g = next.agent_gap(i);
                if g <= cfg.eps_grasp && best.is_none_or(|(_, bg)| g < bg) {
                    best = Some((i, g));
                }
            }
            next.agent.held = best.map(|(i, _)| Held {
                index: i,
                dx: next.poses[i].x - next.agent.x,
                dy: next.poses[i].y - next.agent.y,
            });
        }
        (true, false) => next.agent.held = None,
        _ => {}
    }
    next.agent.grip = a.grip;
    next
}

/// Largest `f` in [0, 1] such that translating the agent by `f * (dx, dy)` stays contact-free.
fn free_fraction(w: &WorldState, dx: f64, dy: f64) -> f64 {
    const PROBE: f64 = 0.001;
    let (x0, y0) = (w.agent.x, w.agent.y);
    let len = (dx * dx + dy * dy).sqrt();
    let n = ((len / PROBE).ceil() as usize).max(1);
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=n {
        let f = k as f64 / n as f64;
        if w.agent_free_at(x0 + f * dx, y0 + f * dy) {
            lo = f;
        } else {
            hi = Some(f);
            break;
        }
    }
    let Some(mut hi) = hi else { return 1.0 };
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if w.agent_free_at(x0 + mid * dx, y0 + mid * dy) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A recorded episode: `states[t]` is followed by `actions[t]`; the last state is terminal.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<WorldState>,
    pub actions: Vec<Action>,
}

impl Trajectory {
    pub fn initial(&self) -> &WorldState {
        &self.states[0]
    }

    pub fn terminal(&self) -> &WorldState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Number of (state, action) frames.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `S * sum ||a_t - a_{t-1}|| + lambda * (grip changes)`, with the initial agent position
    /// standing in for `a_{-1}`.
    pub fn cost(&self, scale: f64, lambda: f64) -> f64 {
        let a0 = &self.states[0].agent;
        let (mut px, mut py, mut pg) = (a0.x, a0.y, a0.grip);
        let mut length = 0.0;
        let mut switches = 0usize;
        for a in &self.actions {
            length += ((a.x - px).powi(2) + (a.y - py).powi(2)).sqrt();
            if a.grip != pg {
                switches += 1;
            }
            (px, py, pg) = (a.x, a.y, a.grip);
        }
        scale * length + lambda * switches as f64
    }
}

/// Fold [`step`] over the actions, recording every state.
pub fn rollout(w0: &WorldState, actions: &[Action]) -> Trajectory {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(w0.clone());
    for a in actions {
        let next = step(states.last().unwrap(), a);
        states.push(next);
    }
    Trajectory {
        states,
        actions: actions.to_vec(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hand {
    Empty,
    /// Index of the held object.
    Holding(usize),
}

/// Per-object attributes visible to goal programs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectFacts {
    pub id: ObjId,
    pub color: Color,
    pub shape: Shape,
    pub area: f64,
    pub perimeter: f64,
    pub extent: f64,
}

impl ObjectFacts {
    pub fn of(b: &Body) -> ObjectFacts {
        ObjectFacts {
            id: b.id,
            color: b.color,
            shape: b.shape,
            area: b.shape.area(),
            perimeter: b.shape.perimeter(),
            extent: b.shape.extent(),
        }
    }
}

/// Predicate abstraction of a world state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolicState {
    pub objects: Arc<Vec<ObjectFacts>>,
    /// Regions containing each object's centroid, parallel to `objects`.
    pub atoms: Vec<RegionSet>,
    pub hand: Hand,
}

impl PartialEq for SymbolicState {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
            && self.hand == other.hand
            && (Arc::ptr_eq(&self.objects, &other.objects) || self.objects == other.objects)
    }
}

impl SymbolicState {
    pub fn index_of(&self, id: ObjId) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    /// Every true `At(id, region)` fact, ordered by object then region.
    pub fn at_facts(&self) -> Vec<(ObjId, Region)> {
        self.objects
            .iter()
            .zip(&self.atoms)
            .flat_map(|(o, s)| s.iter().map(move |r| (o.id, r)))
            .collect()
    }

    pub fn hand_empty(&self) -> bool {
        self.hand == Hand::Empty
    }
}

/// Region membership of a centroid.
pub fn regions_of(cfg: &Config, x: f64, y: f64) -> RegionSet {
    regions::classify(cfg, x, y)
}

/// The perception function: centroid-based region facts plus the attribute table.
pub fn perceive(w: &WorldState) -> SymbolicState {
    let objects = Arc::new(w.scene.bodies.iter().map(ObjectFacts::of).collect());
    perceive_with(w, &objects)
}

/// As [`perceive`], reusing an attribute table built for the same scene.
pub fn perceive_with(w: &WorldState, objects: &Arc<Vec<ObjectFacts>>) -> SymbolicState {
    let cfg = w.config();
    SymbolicState {
        objects: Arc::clone(objects),
        atoms: w.poses.iter().map(|p| regions_of(cfg, p.x, p.y)).collect(),
        hand: match w.agent.held {
            Some(h) => Hand::Holding(h.index),
            None => Hand::Empty,
        },
    }
}
