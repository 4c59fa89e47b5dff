//! Segmentation of a symbolic state sequence into operator spans, and enumeration of the
//! maximal segment chains starting at the first state.

/// Precondition, effect and maintenance tests of one grounded operator.
pub trait Schema<S> {
    fn pre(&self, s: &S) -> bool;
    fn eff(&self, s: &S) -> bool;
    /// Must hold strictly between the start of a span and its end.
    fn mnt(&self, s: &S) -> bool;
}

/// Operator `op` spans states `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub op: usize,
}

/// A chain of abutting segments from state 0 to a state where no segment starts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaximalPlan {
    pub ops: Vec<usize>,
    /// `ops.len() + 1` state indices; operator `t` spans `bounds[t]..=bounds[t + 1]`.
    pub bounds: Vec<usize>,
}

/// For each start index, every segment beginning there. The scan for an operator stops at the
/// first state matching its effect, or gives up at the first maintenance violation.
pub fn discover_segments<S, O: Schema<S>>(states: &[S], ops: &[O]) -> Vec<Vec<Segment>> {
    let mut out = vec![Vec::new(); states.len()];
    for (i, s) in states.iter().enumerate() {
        for (k, op) in ops.iter().enumerate() {
            if !op.pre(s) {
                continue;
            }
            for (j, sj) in states.iter().enumerate().skip(i + 1) {
                if op.eff(sj) {
                    out[i].push(Segment {
                        start: i,
                        end: j,
                        op: k,
                    });
                    break;
                }
                if !op.mnt(sj) {
                    break;
                }
            }
        }
    }
    out
}

/// Suffix enumeration over a segment table. A state with no outgoing segment contributes the
/// empty continuation; any other state must be continued by some segment.
pub fn maximal_plans_from(segments: &[Vec<Segment>]) -> Vec<MaximalPlan> {
    if segments.is_empty() {
        return vec![MaximalPlan {
            ops: vec![],
            bounds: vec![0],
        }];
    }
    let n = segments.len();
    // suffixes[i]: (ops, bounds) pairs starting at i, built back to front
    let mut suffixes: Vec<Vec<MaximalPlan>> = vec![Vec::new(); n];
    for i in (0..n).rev() {
        if segments[i].is_empty() {
            suffixes[i] = vec![MaximalPlan {
                ops: vec![],
                bounds: vec![i],
            }];
            continue;
        }
        let mut here = Vec::new();
        for seg in &segments[i] {
            for rest in &suffixes[seg.end] {
                let mut ops = Vec::with_capacity(rest.ops.len() + 1);
                ops.push(seg.op);
                ops.extend_from_slice(&rest.ops);
                let mut bounds = Vec::with_capacity(rest.bounds.len() + 1);
                bounds.push(i);
                bounds.extend_from_slice(&rest.bounds);
                here.push(MaximalPlan { ops, bounds });
            }
        }
        suffixes[i] = here;
    }
    let mut plans = std::mem::take(&mut suffixes[0]);
    plans.sort();
    plans.dedup();
    plans
}

pub fn maximal_plans<S, O: Schema<S>>(states: &[S], ops: &[O]) -> Vec<MaximalPlan> {
    maximal_plans_from(&discover_segments(states, ops))
}
