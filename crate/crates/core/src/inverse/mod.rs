//! Inverse reasoning: reading plan skeletons off demonstrations, scoring goal programs by how
//! rational the demonstrated plans look under them, and the propose-and-score loop.

mod dp;
mod posterior;

pub use dp::{discover_segments, maximal_plans, maximal_plans_from, MaximalPlan, Schema, Segment};
pub use posterior::{
    posterior, rir_loop, Hypothesis, IterationRecord, Posterior, RirError, RirOutcome, RirParams,
};

use crate::dsl::{eval, Conj, Program};
use crate::tamp::{
    cell_place, instantiates, skeleton_achieves, solve_with_observed, Op, Skeleton, SolveProfile,
};
use crate::world::{
    perceive, perceive_with, Hand, ObjectFacts, SymbolicState, Trajectory, WorldState,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Per-frame perception with runs of equal states collapsed to their first frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicTrajectory {
    pub states: Vec<SymbolicState>,
    /// Frame index of each kept state.
    pub frames: Vec<usize>,
}

impl SymbolicTrajectory {
    pub fn from_states(states: impl IntoIterator<Item = SymbolicState>) -> SymbolicTrajectory {
        let mut out = SymbolicTrajectory {
            states: Vec::new(),
            frames: Vec::new(),
        };
        for (t, s) in states.into_iter().enumerate() {
            if out.states.last() != Some(&s) {
                out.states.push(s);
                out.frames.push(t);
            }
        }
        out
    }

    pub fn initial(&self) -> &SymbolicState {
        &self.states[0]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn abstract_trajectory(tau: &Trajectory) -> SymbolicTrajectory {
    let facts: Arc<Vec<ObjectFacts>> = perceive(tau.initial()).objects;
    SymbolicTrajectory::from_states(tau.states.iter().map(|w| perceive_with(w, &facts)))
}

/// Pick and Place of one object, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainOp {
    Pick(usize),
    Place(usize),
}

impl Schema<SymbolicState> for DomainOp {
    fn pre(&self, s: &SymbolicState) -> bool {
        match *self {
            DomainOp::Pick(_) => s.hand == Hand::Empty,
            DomainOp::Place(i) => s.hand == Hand::Holding(i),
        }
    }

    fn eff(&self, s: &SymbolicState) -> bool {
        match *self {
            DomainOp::Pick(i) => s.hand == Hand::Holding(i),
            DomainOp::Place(_) => s.hand == Hand::Empty,
        }
    }

    fn mnt(&self, s: &SymbolicState) -> bool {
        match *self {
            DomainOp::Pick(_) => true,
            DomainOp::Place(i) => s.hand == Hand::Holding(i),
        }
    }
}

pub fn domain_ops(n_objects: usize) -> Vec<DomainOp> {
    (0..n_objects)
        .flat_map(|i| [DomainOp::Pick(i), DomainOp::Place(i)])
        .collect()
}

/// Ground a maximal plan; placements are pinned to the cell the object occupies when released.
pub fn plan_skeleton(st: &SymbolicTrajectory, ops: &[DomainOp], plan: &MaximalPlan) -> Skeleton {
    plan.ops
        .iter()
        .enumerate()
        .map(|(t, &k)| {
            let objects = &st.initial().objects;
            match ops[k] {
                DomainOp::Pick(i) => Op::Pick { obj: objects[i].id },
                DomainOp::Place(i) => {
                    let end = &st.states[plan.bounds[t + 1]];
                    cell_place(objects[i].id, end.atoms[i])
                }
            }
        })
        .collect()
}

/// Distinct skeletons of the maximal plans of a symbolic trajectory.
pub fn demo_skeletons(st: &SymbolicTrajectory) -> Vec<Skeleton> {
    let ops = domain_ops(st.initial().objects.len());
    let mut out: Vec<Skeleton> = maximal_plans(&st.states, &ops)
        .iter()
        .map(|p| plan_skeleton(st, &ops, p))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Whether `skeleton` is a segmentation of the demonstration: some maximal plan grounds to a
/// narrowing of it.
pub fn plan_satisfies(skeleton: &[Op], tau: &Trajectory) -> bool {
    demo_skeletons(&abstract_trajectory(tau))
        .iter()
        .any(|d| instantiates(d, skeleton))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum InverseError {
    #[error("no observed skeleton is feasible under the hypothesis")]
    InfeasibleUnderHypothesis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalityParams {
    /// Inverse temperature of the plan choice rule.
    pub beta: f64,
    /// Solver budget for the hypothetical alternatives.
    pub profile: SolveProfile,
    /// Log-prior weight per unit of program size.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for RationalityParams {
    fn default() -> Self {
        RationalityParams {
            beta: 0.05,
            profile: SolveProfile::rationality(),
            alpha: 1.0,
            seed: 0,
        }
    }
}

/// `exp(-beta c_i) / sum_j exp(-beta c_j)` in log space. Infinite costs get probability 0; all
/// infinite gives all zeros.
pub fn boltzmann(costs: &[f64], beta: f64) -> Vec<f64> {
    let logits: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if c.is_finite() {
                -beta * c
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return vec![0.0; costs.len()];
    }
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    logits.iter().map(|l| (l - m).exp() / z).collect()
}

/// Cost of each observed skeleton and of the solver's alternatives under one task.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Observed skeletons that achieve the task, with their choice probability.
    pub observed: Vec<(Skeleton, f64)>,
    /// Every candidate in the normalizing set with its sampled minimum cost, observed first.
    pub costs: Vec<(Skeleton, f64)>,
}

fn digest(w0: &WorldState, g: &[Conj], observed: &[Skeleton]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(format!("{:?}", (&w0.scene.bodies, &w0.poses, &w0.agent)).as_bytes());
    h.update(format!("{g:?}").as_bytes());
    for sk in observed {
        h.update(crate::tamp::skeleton_string(sk).as_bytes());
    }
    h.finalize().into()
}

type Cached = Arc<Result<Selection, InverseError>>;

/// Likelihood computations sharing a cache of solver calls across hypotheses.
#[derive(Debug, Default)]
pub struct Scorer {
    pub params: RationalityParams,
    cache: Mutex<HashMap<[u8; 32], Cached>>,
}

/// A demonstration with its abstraction and plan readings computed once.
#[derive(Clone, Debug)]
pub struct DemoView {
    pub trajectory: Arc<Trajectory>,
    pub symbolic: SymbolicTrajectory,
    pub skeletons: Vec<Skeleton>,
}

impl DemoView {
    pub fn new(tau: Trajectory) -> DemoView {
        let symbolic = abstract_trajectory(&tau);
        let skeletons = demo_skeletons(&symbolic);
        DemoView {
            trajectory: Arc::new(tau),
            symbolic,
            skeletons,
        }
    }
}

impl Scorer {
    pub fn new(params: RationalityParams) -> Scorer {
        Scorer {
            params,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Choice probabilities of the observed skeletons that achieve `g`, normalized over them and
    /// the solver's alternatives.
    pub fn plan_selection_likelihood(
        &self,
        g: &[Conj],
        observed: &[Skeleton],
        w0: &WorldState,
    ) -> Result<Selection, InverseError> {
        let s0 = perceive(w0);
        let mut kept: Vec<Skeleton> = observed
            .iter()
            .filter(|sk| skeleton_achieves(&s0, sk, g))
            .cloned()
            .collect();
        kept.sort();
        kept.dedup();
        if kept.is_empty() {
            return Err(InverseError::InfeasibleUnderHypothesis);
        }
        let key = digest(w0, g, &kept);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return (**hit).clone();
        }
        let seed = self.params.seed ^ u64::from_le_bytes(key[..8].try_into().unwrap());
        let result = match solve_with_observed(w0, g, &kept, &self.params.profile, seed) {
            Err(_) => Err(InverseError::InfeasibleUnderHypothesis),
            Ok(out) => {
                let costs: Vec<(Skeleton, f64)> = out
                    .arms
                    .iter()
                    .map(|a| {
                        let c = if a.feasible() { a.c_min } else { f64::INFINITY };
                        (a.skeleton.clone(), c)
                    })
                    .collect();
                let probs = boltzmann(
                    &costs.iter().map(|(_, c)| *c).collect::<Vec<_>>(),
                    self.params.beta,
                );
                let observed: Vec<(Skeleton, f64)> = kept
                    .iter()
                    .map(|sk| {
                        let i = costs.iter().position(|(s, _)| s == sk).unwrap();
                        (sk.clone(), probs[i])
                    })
                    .collect();
                let any_feasible = kept
                    .iter()
                    .any(|sk| costs.iter().any(|(s, c)| s == sk && c.is_finite()));
                if any_feasible {
                    Ok(Selection { observed, costs })
                } else {
                    Err(InverseError::InfeasibleUnderHypothesis)
                }
            }
        };
        self.cache
            .lock()
            .unwrap()
            .insert(key, Arc::new(result.clone()));
        result
    }

    /// `ln p(tau | e)`: the summed choice probability of the demonstration's plans under the
    /// task `e` grounds to; `-inf` when `e` fails or nothing satisfies it.
    pub fn log_demo_likelihood(&self, e: &Program, demo: &DemoView) -> f64 {
        let w0 = demo.trajectory.initial();
        let Ok(g) = eval(e, demo.symbolic.initial()) else {
            return f64::NEG_INFINITY;
        };
        match self.plan_selection_likelihood(&g, &demo.skeletons, w0) {
            Ok(sel) => sel.observed.iter().map(|(_, p)| p).sum::<f64>().ln(),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub fn demo_likelihood(&self, e: &Program, tau: &Trajectory) -> f64 {
        self.log_demo_likelihood(e, &DemoView::new(tau.clone()))
            .exp()
    }
}

/// Fresh-cache convenience wrapper.
pub fn plan_selection_likelihood(
    g: &[Conj],
    observed: &[Skeleton],
    w0: &WorldState,
    params: &RationalityParams,
) -> Result<Selection, InverseError> {
    Scorer::new(params.clone()).plan_selection_likelihood(g, observed, w0)
}

pub fn demo_likelihood(e: &Program, tau: &Trajectory, params: &RationalityParams) -> f64 {
    Scorer::new(params.clone()).demo_likelihood(e, tau)
}

#[cfg(test)]
mod tests;
