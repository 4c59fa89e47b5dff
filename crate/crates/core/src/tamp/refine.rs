use super::rrt::{path_length, rrt_connect, Checker, Point, RrtParams};
use super::{CostModel, Op};
use crate::world::{
    regions_of, rollout, sampling_boxes, step, Action, ObjId, RegionSet, Trajectory, WorldState,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Placement samples per local attempt.
    pub placement_attempts: usize,
    pub grasp_attempts: usize,
    /// Fresh placements tried after a motion-planning failure.
    pub local_backtracks: usize,
    /// Restarts of the whole skeleton from the initial state.
    pub global_restarts: usize,
    /// Grasp standoff as a fraction of the grasp radius.
    pub grasp_gap_fraction: f64,
    /// Minimum gap between a placed object (and the releasing agent) and everything else.
    pub place_clearance: f64,
    /// Probability of proposing a placement near the object's current position rather than
    /// uniformly over the region.
    pub local_fraction: f64,
    pub local_sigma: f64,
    pub rrt: RrtParams,
    pub cost: CostModel,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            placement_attempts: 200,
            grasp_attempts: 40,
            local_backtracks: 3,
            global_restarts: 2,
            grasp_gap_fraction: 0.3,
            place_clearance: 0.01,
            local_fraction: 0.6,
            local_sigma: 0.04,
            rrt: RrtParams::default(),
            cost: CostModel::default(),
        }
    }
}

/// Continuous parameters bound for one operator. Paths start where the previous operator
/// left the agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Binding {
    Pick {
        obj: ObjId,
        path: Vec<Point>,
        /// Object position minus agent position.
        grasp: Point,
    },
    Place {
        obj: ObjId,
        path: Vec<Point>,
        pose: Point,
    },
}

impl Binding {
    pub fn path(&self) -> &[Point] {
        match self {
            Binding::Pick { path, .. } | Binding::Place { path, .. } => path,
        }
    }

    /// Grip bit held while moving, and the bit commanded at the end.
    fn grips(&self) -> (bool, bool) {
        match self {
            Binding::Pick { .. } => (false, true),
            Binding::Place { .. } => (true, false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub bindings: Vec<Binding>,
    pub path_length: f64,
    pub grasp_changes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub refinement: Refinement,
    pub trajectory: Trajectory,
    pub cost: f64,
}

/// Waypoint actions walking a polyline in pieces no longer than `spacing`, then one action at
/// the end with the final grip bit.
pub fn binding_actions(b: &Binding, spacing: f64) -> Vec<Action> {
    let (moving, last) = b.grips();
    let path = b.path();
    let mut out = Vec::new();
    for w in path.windows(2) {
        let (a, c) = (w[0], w[1]);
        let len = ((c.0 - a.0).powi(2) + (c.1 - a.1).powi(2)).sqrt();
        let n = (len / spacing).ceil() as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let p = if k == n {
                c
            } else {
                (a.0 + t * (c.0 - a.0), a.1 + t * (c.1 - a.1))
            };
            out.push(Action::new(p.0, p.1, moving));
        }
    }
    let end = *path.last().expect("paths are non-empty");
    out.push(Action::new(end.0, end.1, last));
    out
}

fn run(w: &WorldState, actions: &[Action]) -> WorldState {
    actions.iter().fold(w.clone(), |s, a| step(&s, a))
}

fn grasp_point(w: &WorldState, i: usize, angle: f64, gap: f64) -> Option<Point> {
    let p = w.poses[i];
    let (dx, dy) = (angle.cos(), angle.sin());
    let r = w.config().agent_radius;
    let circles = w.object_circles(i);
    let gap_at = |d: f64| {
        let a = crate::world::Circle::new(p.x + d * dx, p.y + d * dy, r);
        circles
            .iter()
            .map(|c| a.gap(c))
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (0.0, w.scene.bodies[i].bound + r + gap + 0.01);
    if gap_at(hi) < gap {
        return None;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if gap_at(mid) < gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((p.x + hi * dx, p.y + hi * dy))
}

fn pick(
    w: &WorldState,
    i: usize,
    params: &RefineParams,
    rng: &mut impl Rng,
) -> Option<(Binding, Vec<Action>, WorldState)> {
    let cfg = w.config();
    let target_gap = params.grasp_gap_fraction * cfg.eps_grasp;
    let checker = Checker::for_agent(w, params.rrt.margin);
    let start = (w.agent.x, w.agent.y);
    let o = w.poses[i];
    for _ in 0..params.grasp_attempts {
        let angle = if rng.gen_bool(0.5) {
            let toward = (start.1 - o.y).atan2(start.0 - o.x);
            toward + rng.gen_range(-1.2..1.2)
        } else {
            rng.gen_range(0.0..std::f64::consts::TAU)
        };
        let Some(q) = grasp_point(w, i, angle, target_gap) else {
            continue;
        };
        if !checker.free(q.0, q.1) {
            continue;
        }
        // the attach rule takes the nearest object within reach
        let mut probe = w.clone();
        probe.agent.x = q.0;
        probe.agent.y = q.1;
        let own = probe.agent_gap(i);
        if own > cfg.eps_grasp
            || (0..w.n_objects()).any(|j| j != i && probe.agent_gap(j) <= own + 1e-6)
        {
            continue;
        }
        let Some(path) = rrt_connect(start, q, &checker, &params.rrt, rng) else {
            continue;
        };
        let binding = Binding::Pick {
            obj: w.scene.bodies[i].id,
            path,
            grasp: (o.x - q.0, o.y - q.1),
        };
        let actions = binding_actions(&binding, cfg.max_step());
        let next = run(w, &actions);
        if next.agent.held.map(|h| h.index) != Some(i) || (next.agent.x, next.agent.y) != q {
            continue;
        }
        return Some((binding, actions, next));
    }
    None
}

fn propose_placement(
    w: &WorldState,
    i: usize,
    boxes: &[[f64; 4]],
    params: &RefineParams,
    rng: &mut impl Rng,
) -> Point {
    let o = w.poses[i];
    if rng.gen_bool(params.local_fraction) {
        let m = w.scene.bodies[i].bound + params.place_clearance;
        let near = boxes
            .iter()
            .map(|b| {
                let clampm = |v: f64, lo: f64, hi: f64| {
                    if lo + m <= hi - m {
                        v.clamp(lo + m, hi - m)
                    } else {
                        0.5 * (lo + hi)
                    }
                };
                (clampm(o.x, b[0], b[1]), clampm(o.y, b[2], b[3]))
            })
            .min_by(|a, b| {
                let da = (a.0 - o.x).powi(2) + (a.1 - o.y).powi(2);
                let db = (b.0 - o.x).powi(2) + (b.1 - o.y).powi(2);
                da.total_cmp(&db)
            })
            .expect("at least one box");
        // Box-Muller
        let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen_range(0.0..1.0));
        let r = params.local_sigma * (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        (near.0 + r * a.cos(), near.1 + r * a.sin())
    } else {
        let areas: Vec<f64> = boxes
            .iter()
            .map(|b| (b[1] - b[0]) * (b[3] - b[2]))
            .collect();
        let total: f64 = areas.iter().sum();
        let mut pick = rng.gen_range(0.0..total);
        let mut k = 0;
        while k + 1 < boxes.len() && pick > areas[k] {
            pick -= areas[k];
            k += 1;
        }
        let b = boxes[k];
        (rng.gen_range(b[0]..b[1]), rng.gen_range(b[2]..b[3]))
    }
}

fn place(
    w: &WorldState,
    i: usize,
    incl: RegionSet,
    excl: RegionSet,
    params: &RefineParams,
    rng: &mut impl Rng,
) -> Option<(Binding, Vec<Action>, WorldState)> {
    let h = w.agent.held.filter(|h| h.index == i)?;
    let cfg = w.config();
    let boxes = sampling_boxes(cfg, incl);
    if boxes.is_empty() {
        return None;
    }
    let motion = Checker::for_agent(w, params.rrt.margin);
    let roomy = Checker::for_agent(w, params.place_clearance);
    let start = (w.agent.x, w.agent.y);
    for _ in 0..=params.local_backtracks {
        let mut target = None;
        for _ in 0..params.placement_attempts {
            let p = propose_placement(w, i, &boxes, params, rng);
            let a = (p.0 - h.dx, p.1 - h.dy);
            // the pose the simulator will actually produce
            let (px, py) = (a.0 + h.dx, a.1 + h.dy);
            let cell = regions_of(cfg, px, py);
            if !incl.is_subset(cell) || !cell.intersect(excl).is_empty() {
                continue;
            }
            if roomy.free(a.0, a.1) {
                target = Some((a, (px, py)));
                break;
            }
        }
        let (a, pose) = target?;
        let Some(path) = rrt_connect(start, a, &motion, &params.rrt, rng) else {
            continue;
        };
        let binding = Binding::Place {
            obj: w.scene.bodies[i].id,
            path,
            pose,
        };
        let actions = binding_actions(&binding, cfg.max_step());
        let next = run(w, &actions);
        let cell = regions_of(cfg, next.poses[i].x, next.poses[i].y);
        if next.agent.held.is_some()
            || !incl.is_subset(cell)
            || !cell.intersect(excl).is_empty()
            || next.validate().is_err()
        {
            continue;
        }
        return Some((binding, actions, next));
    }
    None
}

/// One sampling pass over the skeleton's constraint chain, with local and global backtracking.
/// `None` means the budget ran out without a refinement.
pub fn refine(
    skeleton: &[Op],
    w0: &WorldState,
    params: &RefineParams,
    rng: &mut impl Rng,
) -> Option<Refined> {
    'restart: for _ in 0..=params.global_restarts {
        let mut w = w0.clone();
        let mut actions = Vec::new();
        let mut bindings = Vec::new();
        for op in skeleton {
            let i = w.scene.index_of(op.obj())?;
            let step = match *op {
                Op::Pick { .. } => {
                    if w.agent.held.is_some() {
                        return None;
                    }
                    pick(&w, i, params, rng)
                }
                Op::Place { incl, excl, .. } => {
                    if w.agent.held.map(|h| h.index) != Some(i) {
                        return None;
                    }
                    place(&w, i, incl, excl, params, rng)
                }
            };
            let Some((b, acts, next)) = step else {
                continue 'restart;
            };
            bindings.push(b);
            actions.extend(acts);
            w = next;
        }
        let trajectory = rollout(w0, &actions);
        if trajectory.terminal() != &w {
            continue;
        }
        let cost = trajectory.cost(params.cost.scale, params.cost.lambda);
        let path_length = bindings.iter().map(|b| path_length(b.path())).sum();
        return Some(Refined {
            refinement: Refinement {
                bindings,
                path_length,
                grasp_changes: skeleton.len(),
            },
            trajectory,
            cost,
        });
    }
    None
}
