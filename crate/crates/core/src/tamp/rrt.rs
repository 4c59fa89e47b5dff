use crate::world::{bounding_radius, Circle, WorldState};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Point = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrtParams {
    /// Longest tree edge.
    pub step: f64,
    pub max_iters: usize,
    /// Spacing of collision checks along an edge.
    pub check_spacing: f64,
    /// Extra clearance demanded around every obstacle and the workspace edge.
    pub margin: f64,
    pub shortcut_iters: usize,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            step: 0.05,
            max_iters: 1500,
            check_spacing: 0.003,
            margin: 0.002,
            shortcut_iters: 40,
        }
    }
}

/// Collision test for a rigid set of circles translated with the agent.
#[derive(Clone, Debug)]
pub struct Checker {
    statics: Vec<(Circle, Vec<Circle>)>,
    moving: Vec<Circle>,
    moving_bound: f64,
    margin: f64,
}

impl Checker {
    /// `moving` is given relative to the agent position.
    pub fn new(obstacles: Vec<Vec<Circle>>, moving: Vec<Circle>, margin: f64) -> Checker {
        let statics = obstacles
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|cs| {
                let (cx, cy) = (
                    cs.iter().map(|c| c.x).sum::<f64>() / cs.len() as f64,
                    cs.iter().map(|c| c.y).sum::<f64>() / cs.len() as f64,
                );
                (Circle::new(cx, cy, bounding_radius(cx, cy, &cs)), cs)
            })
            .collect();
        let moving_bound = bounding_radius(0.0, 0.0, &moving);
        Checker {
            statics,
            moving,
            moving_bound,
            margin,
        }
    }

    /// The agent, plus its load if holding, against every other object.
    pub fn for_agent(w: &WorldState, margin: f64) -> Checker {
        let held = w.agent.held;
        let mut moving = vec![Circle::new(0.0, 0.0, w.config().agent_radius)];
        if let Some(h) = held {
            let b = &w.scene.bodies[h.index];
            let th = w.poses[h.index].theta;
            moving.extend(b.local.iter().map(|c| c.placed(h.dx, h.dy, th)));
        }
        let obstacles = (0..w.n_objects())
            .filter(|&i| held.map(|h| h.index) != Some(i))
            .map(|i| w.object_circles(i))
            .collect();
        Checker::new(obstacles, moving, margin)
    }

    pub fn free(&self, x: f64, y: f64) -> bool {
        let m = self.margin;
        for c in &self.moving {
            let (cx, cy) = (c.x + x, c.y + y);
            if cx - c.r <= m || cx + c.r >= 1.0 - m || cy - c.r <= m || cy + c.r >= 1.0 - m {
                return false;
            }
        }
        for (bound, cs) in &self.statics {
            let reach = bound.r + self.moving_bound + m;
            if (bound.x - x).powi(2) + (bound.y - y).powi(2) > reach * reach {
                continue;
            }
            for a in &self.moving {
                let (ax, ay) = (a.x + x, a.y + y);
                for b in cs {
                    let rr = a.r + b.r + m;
                    if (ax - b.x).powi(2) + (ay - b.y).powi(2) <= rr * rr {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn segment_free(&self, a: Point, b: Point, spacing: f64) -> bool {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = (len / spacing).ceil().max(1.0) as usize;
        (0..=n).all(|k| {
            let t = k as f64 / n as f64;
            self.free(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        })
    }

    /// Smallest gap between the moving set at `(x, y)` and any obstacle.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (_, cs) in &self.statics {
            for a in &self.moving {
                for b in cs {
                    best = best.min(a.translated(x, y).gap(b));
                }
            }
        }
        best
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt()
}

pub fn path_length(path: &[Point]) -> f64 {
    path.windows(2).map(|w| dist(w[0], w[1])).sum()
}

struct Tree {
    pts: Vec<Point>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: Point) -> Tree {
        Tree {
            pts: vec![root],
            parent: vec![0],
        }
    }

    fn nearest(&self, q: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.pts.iter().enumerate() {
            let d = (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn path_to_root(&self, mut i: usize) -> Vec<Point> {
        let mut out = vec![self.pts[i]];
        while i != 0 {
            i = self.parent[i];
            out.push(self.pts[i]);
        }
        out
    }
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

fn extend(tree: &mut Tree, q: Point, checker: &Checker, p: &RrtParams) -> Extend {
    let near = tree.nearest(q);
    let from = tree.pts[near];
    let d = dist(from, q);
    let (to, reached) = if d <= p.step {
        (q, true)
    } else {
        let t = p.step / d;
        (
            (from.0 + t * (q.0 - from.0), from.1 + t * (q.1 - from.1)),
            false,
        )
    };
    if !checker.segment_free(from, to, p.check_spacing) {
        return Extend::Trapped;
    }
    tree.pts.push(to);
    tree.parent.push(near);
    let i = tree.pts.len() - 1;
    if reached {
        Extend::Reached(i)
    } else {
        Extend::Advanced(i)
    }
}

fn connect(tree: &mut Tree, q: Point, checker: &Checker, p: &RrtParams) -> Option<usize> {
    loop {
        match extend(tree, q, checker, p) {
            Extend::Reached(i) => return Some(i),
            Extend::Advanced(_) => continue,
            Extend::Trapped => return None,
        }
    }
}

fn shortcut(path: Vec<Point>, checker: &Checker, p: &RrtParams, rng: &mut impl Rng) -> Vec<Point> {
    let mut path = path;
    for _ in 0..p.shortcut_iters {
        if path.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..path.len() - 2);
        let j = rng.gen_range(i + 2..path.len());
        if checker.segment_free(path[i], path[j], p.check_spacing) {
            path.drain(i + 1..j);
        }
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !checker.segment_free(path[i], path[j], p.check_spacing) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Bidirectional RRT between two agent positions. The returned polyline starts at `start`,
/// ends at `goal`, and every edge passes `segment_free`.
pub fn rrt_connect(
    start: Point,
    goal: Point,
    checker: &Checker,
    params: &RrtParams,
    rng: &mut impl Rng,
) -> Option<Vec<Point>> {
    if !checker.free(start.0, start.1) || !checker.free(goal.0, goal.1) {
        return None;
    }
    if checker.segment_free(start, goal, params.check_spacing) {
        return Some(vec![start, goal]);
    }
    let mut a = Tree::new(start);
    let mut b = Tree::new(goal);
    let mut a_is_start = true;
    for _ in 0..params.max_iters {
        let q = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let new = match extend(&mut a, q, checker, params) {
            Extend::Trapped => None,
            Extend::Reached(i) | Extend::Advanced(i) => Some(i),
        };
        if let Some(i) = new {
            let target = a.pts[i];
            if let Some(j) = connect(&mut b, target, checker, params) {
                let mut from_a = a.path_to_root(i);
                from_a.reverse();
                let from_b = b.path_to_root(j);
                from_a.extend(from_b.into_iter().skip(1));
                if !a_is_start {
                    from_a.reverse();
                }
                return Some(shortcut(from_a, checker, params, rng));
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    None
}
