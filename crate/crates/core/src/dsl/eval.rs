use super::{Cond, Goal, Measure, Order, Program, Selector};
use crate::world::{
    perceive_with, ObjId, ObjectFacts, Region, RegionSet, SymbolicState, Trajectory,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A goal conjunction: for each mentioned object, the regions its centroid must lie in.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Conj(pub BTreeMap<ObjId, RegionSet>);

impl Conj {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of `At` atoms.
    pub fn atom_count(&self) -> usize {
        self.0.values().map(|r| r.len()).sum()
    }

    pub fn holds(&self, s: &SymbolicState) -> bool {
        self.0
            .iter()
            .all(|(id, want)| s.index_of(*id).is_some_and(|i| want.is_subset(s.atoms[i])))
    }

    pub fn atoms(&self) -> impl Iterator<Item = (ObjId, Region)> + '_ {
        self.0
            .iter()
            .flat_map(|(id, r)| r.iter().map(move |x| (*id, x)))
    }
}

/// Ordered subgoals `g_1, ..., g_k`.
pub type GroundedTask = Vec<Conj>;

/// The constructor level of a grounded task before flattening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskSpec {
    Achieve(Conj),
    Sequence(Vec<TaskSpec>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum EvalError {
    #[error("program selects no objects")]
    EmptyTask,
    #[error("object {0} is sent to Middle together with another region")]
    IllegalMiddleComposition(ObjId),
    #[error("object {0} is sent to regions that cannot hold at once")]
    UnsatisfiableConjunction(ObjId),
}

pub fn flatten(t: &TaskSpec) -> GroundedTask {
    match t {
        TaskSpec::Achieve(c) => vec![c.clone()],
        TaskSpec::Sequence(ts) => ts.iter().flat_map(flatten).collect(),
    }
}

const TIE: f64 = 1e-12;

fn extreme(m: Measure, inner: Vec<usize>, objs: &[ObjectFacts], largest: bool) -> Vec<usize> {
    let vals = inner.iter().map(|&i| m.of(&objs[i]));
    let best = if largest {
        vals.fold(f64::NEG_INFINITY, f64::max)
    } else {
        vals.fold(f64::INFINITY, f64::min)
    };
    inner
        .into_iter()
        .filter(|&i| (m.of(&objs[i]) - best).abs() <= TIE)
        .collect()
}

/// Indices (ascending) of the objects a selector picks.
pub(crate) fn select(sel: &Selector, objs: &[ObjectFacts]) -> Vec<usize> {
    match sel {
        Selector::All => (0..objs.len()).collect(),
        Selector::Filter(p) => (0..objs.len()).filter(|&i| p.holds(&objs[i])).collect(),
        Selector::Largest(m, s) => extreme(*m, select(s, objs), objs, true),
        Selector::Smallest(m, s) => extreme(*m, select(s, objs), objs, false),
        Selector::MostNumerousShape(s) => {
            let inner = select(s, objs);
            let mut counts: BTreeMap<_, usize> = BTreeMap::new();
            for &i in &inner {
                *counts.entry(objs[i].shape.base_class()).or_default() += 1;
            }
            let Some(&top) = counts.values().max() else {
                return Vec::new();
            };
            inner
                .into_iter()
                .filter(|&i| counts[&objs[i].shape.base_class()] == top)
                .collect()
        }
        Selector::OddColor(s) => {
            let inner = select(s, objs);
            let mut counts: BTreeMap<_, usize> = BTreeMap::new();
            for &i in &inner {
                *counts.entry(objs[i].color).or_default() += 1;
            }
            let (Some(&lo), Some(&hi)) = (counts.values().min(), counts.values().max()) else {
                return Vec::new();
            };
            if lo == hi {
                return Vec::new();
            }
            inner
                .into_iter()
                .filter(|&i| counts[&objs[i].color] == lo)
                .collect()
        }
        Selector::Except(a, b) => {
            let drop = select(b, objs);
            select(a, objs)
                .into_iter()
                .filter(|i| !drop.contains(i))
                .collect()
        }
    }
}

fn conj(goals: &[Goal], objs: &[ObjectFacts]) -> Result<Conj, EvalError> {
    let mut c = BTreeMap::new();
    for g in goals {
        for i in select(&g.selector, objs) {
            let e: &mut RegionSet = c.entry(objs[i].id).or_default();
            *e = e.union(g.place);
        }
    }
    for (&id, &r) in &c {
        if r.contains(Region::Middle) && r.len() > 1 {
            return Err(EvalError::IllegalMiddleComposition(id));
        }
        if !r.satisfiable() {
            return Err(EvalError::UnsatisfiableConjunction(id));
        }
    }
    Ok(Conj(c))
}

fn cond_holds(c: &Cond, objs: &[ObjectFacts]) -> bool {
    match c {
        Cond::Exists(s) => !select(s, objs).is_empty(),
        Cond::CountAtLeast(s, n) => select(s, objs).len() >= *n as usize,
    }
}

/// Ground a program against a state's attribute table. Conjunctions may be empty here.
pub fn eval_spec(e: &Program, s: &SymbolicState) -> Result<TaskSpec, EvalError> {
    let objs = s.objects.as_slice();
    match e {
        Program::Achieve(goals) => Ok(TaskSpec::Achieve(conj(goals, objs)?)),
        Program::Seq(ts) => Ok(TaskSpec::Sequence(
            ts.iter()
                .map(|t| eval_spec(t, s))
                .collect::<Result<_, _>>()?,
        )),
        Program::If(c, a, b) => {
            if cond_holds(c, objs) {
                eval_spec(a, s)
            } else {
                eval_spec(b, s)
            }
        }
        Program::SortBy(m, order, sel, places) => {
            let mut idx = select(sel, objs);
            // stable sort keeps id order among equal sizes
            idx.sort_by(|&a, &b| {
                let (x, y) = (m.of(&objs[a]), m.of(&objs[b]));
                match order {
                    Order::Asc => x.total_cmp(&y),
                    Order::Desc => y.total_cmp(&x),
                }
            });
            Ok(TaskSpec::Sequence(
                idx.iter()
                    .zip(places)
                    .map(|(&i, &p)| TaskSpec::Achieve(Conj(BTreeMap::from([(objs[i].id, p)]))))
                    .collect(),
            ))
        }
    }
}

/// Ground a program into its subgoal sequence. Empty conjunctions are dropped; nothing left
/// is an error.
pub fn eval(e: &Program, s: &SymbolicState) -> Result<GroundedTask, EvalError> {
    let g: GroundedTask = flatten(&eval_spec(e, s)?)
        .into_iter()
        .filter(|c| !c.is_empty())
        .collect();
    if g.is_empty() {
        Err(EvalError::EmptyTask)
    } else {
        Ok(g)
    }
}

/// Greedy earliest-match scan: does the state sequence pass through every subgoal in order?
pub fn satisfies_states<'a>(
    g: &[Conj],
    states: impl IntoIterator<Item = &'a SymbolicState>,
) -> bool {
    let mut stage = 0;
    for s in states {
        while stage < g.len() && g[stage].holds(s) {
            stage += 1;
        }
        if stage == g.len() {
            return true;
        }
    }
    stage == g.len()
}

pub fn satisfies(e: &Program, tau: &Trajectory) -> Result<bool, EvalError> {
    let facts = Arc::new(
        tau.initial()
            .scene
            .bodies
            .iter()
            .map(ObjectFacts::of)
            .collect::<Vec<_>>(),
    );
    let states: Vec<SymbolicState> = tau
        .states
        .iter()
        .map(|w| perceive_with(w, &facts))
        .collect();
    let g = eval(e, &states[0])?;
    Ok(satisfies_states(&g, &states))
}
