//! Forward reasoning: symbolic search over Pick/Place skeletons, sampling-based refinement
//! into executable trajectories, and LCB allocation of refinement effort across skeletons.

mod refine;
mod rrt;
mod search;
mod solve;

pub use refine::{binding_actions, refine, Binding, RefineParams, Refined, Refinement};
pub use rrt::{path_length, rrt_connect, Checker, Point, RrtParams};
pub use search::{symbolic_search, SearchParams, SkeletonStream};
pub use solve::{
    arm_seed, lcb, solve, solve_with_observed, ArmStats, Bandit, PlanReport, SolveOutcome,
    SolveProfile, SolveReport,
};

use crate::dsl::Conj;
use crate::world::{Hand, ObjId, RegionSet, SymbolicState};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A grounded operator.
///
/// `Place` puts the held object somewhere whose region set contains `incl` and avoids `excl`;
/// regions in neither set are left to the sampler.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Op {
    Pick {
        obj: ObjId,
    },
    Place {
        obj: ObjId,
        incl: RegionSet,
        excl: RegionSet,
    },
}

impl Op {
    pub fn obj(&self) -> ObjId {
        match self {
            Op::Pick { obj } | Op::Place { obj, .. } => *obj,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Pick { obj } => write!(f, "Pick({obj})"),
            Op::Place { obj, incl, excl } => {
                write!(f, "Place({obj}, {incl}")?;
                if !excl.is_empty() {
                    write!(f, ", not {excl}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// An ordered operator sequence with continuous parameters unbound.
pub type Skeleton = Vec<Op>;

pub fn skeleton_string(sk: &[Op]) -> String {
    let parts: Vec<String> = sk.iter().map(Op::to_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Symbolic effect of `op`, or `None` if its precondition fails.
pub fn apply(s: &SymbolicState, op: &Op) -> Option<SymbolicState> {
    let i = s.index_of(op.obj())?;
    let mut next = s.clone();
    match *op {
        Op::Pick { .. } => {
            if s.hand != Hand::Empty {
                return None;
            }
            next.hand = Hand::Holding(i);
        }
        Op::Place { incl, excl, .. } => {
            if s.hand != Hand::Holding(i) {
                return None;
            }
            next.hand = Hand::Empty;
            next.atoms[i] = s.atoms[i].minus(incl.union(excl)).union(incl);
        }
    }
    Some(next)
}

/// Path length and grip-change weights of the trajectory cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Multiplier taking unit-square lengths to the nominal pixel scale.
    pub scale: f64,
    /// Cost per grip change, i.e. per operator.
    pub lambda: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            scale: 512.0,
            lambda: 80.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum TampError {
    #[error("no plan found")]
    NoPlanFound,
}

/// Atoms mentioned anywhere in the task, per object.
pub fn goal_universe(g: &[Conj]) -> BTreeMap<ObjId, RegionSet> {
    let mut u: BTreeMap<ObjId, RegionSet> = BTreeMap::new();
    for c in g {
        for (&id, &r) in &c.0 {
            let e = u.entry(id).or_default();
            *e = e.union(r);
        }
    }
    u
}

/// Staged Hamming heuristic: `|s xor g_stage| + sum_{i >= stage} |g_i xor g_{i+1}| - stage`,
/// with every set restricted to the atoms the task mentions.
pub fn hamming_heuristic(s: &SymbolicState, g: &[Conj], stage: usize) -> f64 {
    let u = goal_universe(g);
    let st = stage.min(g.len().saturating_sub(1));
    let atoms_of =
        |c: Option<&Conj>, id: ObjId| c.and_then(|c| c.0.get(&id)).copied().unwrap_or_default();
    let diff = |a: Option<&Conj>, b: Option<&Conj>| -> usize {
        u.keys()
            .map(|id| (atoms_of(a, *id).0 ^ atoms_of(b, *id).0).count_ones() as usize)
            .sum()
    };
    let state_part: usize = u
        .iter()
        .map(|(id, mask)| {
            let have = s
                .index_of(*id)
                .map(|i| s.atoms[i].intersect(*mask))
                .unwrap_or_default();
            (have.0 ^ atoms_of(g.get(st), *id).0).count_ones() as usize
        })
        .sum();
    let chain: usize = (st..g.len().saturating_sub(1))
        .map(|i| diff(g.get(i), g.get(i + 1)))
        .sum();
    state_part as f64 + chain as f64 - stage as f64
}

/// Whether `concrete` is `abstract_` with every placement narrowed: same operators on the same
/// objects, each concrete placement region set compatible with the abstract one.
pub fn instantiates(concrete: &[Op], abstract_: &[Op]) -> bool {
    concrete.len() == abstract_.len()
        && concrete.iter().zip(abstract_).all(|(c, a)| match (c, a) {
            (Op::Pick { obj: x }, Op::Pick { obj: y }) => x == y,
            (
                Op::Place {
                    obj: x,
                    incl: ci,
                    excl: ce,
                },
                Op::Place {
                    obj: y,
                    incl: ai,
                    excl: ae,
                },
            ) => x == y && ai.is_subset(*ci) && ae.is_subset(*ce),
            _ => false,
        })
}

/// Symbolic execution of `sk` from `s0`: every step applicable, the subgoals passed in order,
/// the last one holding at the end with the hand empty.
pub fn skeleton_achieves(s0: &SymbolicState, sk: &[Op], g: &[Conj]) -> bool {
    let mut states = vec![s0.clone()];
    for op in sk {
        match apply(states.last().unwrap(), op) {
            Some(s) => states.push(s),
            None => return false,
        }
    }
    let last = states.last().unwrap();
    last.hand_empty()
        && g.last().is_none_or(|c| c.holds(last))
        && crate::dsl::satisfies_states(g, states.iter())
}

/// Place pinned to one exact cell, as read back from an observed trajectory.
pub fn cell_place(obj: ObjId, cell: RegionSet) -> Op {
    Op::Place {
        obj,
        incl: cell,
        excl: RegionSet(RegionSet::FULL.0 & !cell.0),
    }
}

#[cfg(test)]
mod tests;
