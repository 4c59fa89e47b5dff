use super::{goal_universe, Op, Skeleton};
use crate::dsl::Conj;
use crate::world::{realizable, Hand, RegionSet, SymbolicState};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Node expansions before the stream gives up.
    pub max_expansions: usize,
    /// Longest skeleton considered; `None` means `2 * (objects + 2)`.
    pub max_depth: Option<usize>,
    /// Yields collected and re-sorted by length before being released.
    pub window: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            max_expansions: 50_000,
            max_depth: None,
            window: 16,
        }
    }
}

struct Node {
    parent: Option<usize>,
    op: Option<Op>,
    atoms: Box<[RegionSet]>,
    hand: Option<usize>,
    stage: usize,
    depth: usize,
}

/// Lazily enumerates skeletons whose symbolic execution passes through the subgoals in order
/// and ends with the last one true and the hand empty. A* over the plan tree (no duplicate
/// detection, so distinct paths are distinct yields), `f = depth + h`, ties in insertion order.
pub struct SkeletonStream {
    ids: Vec<u32>,
    goal: Vec<Vec<(usize, RegionSet)>>,
    /// Per object: the mentioned regions and the place options over them.
    universe: Vec<RegionSet>,
    places: Vec<Vec<(RegionSet, RegionSet)>>,
    chain: Vec<usize>,
    nodes: Vec<Node>,
    open: BinaryHeap<Reverse<(i64, u64, usize)>>,
    counter: u64,
    expansions: usize,
    params: SearchParams,
    max_depth: usize,
    out: VecDeque<Skeleton>,
    done: bool,
}

pub fn symbolic_search(s0: &SymbolicState, g: &[Conj], params: SearchParams) -> SkeletonStream {
    let n = s0.objects.len();
    let ids: Vec<u32> = s0.objects.iter().map(|o| o.id).collect();
    let mut done = g.is_empty();
    let goal: Vec<Vec<(usize, RegionSet)>> = g
        .iter()
        .map(|c| {
            c.0.iter()
                .filter_map(|(id, r)| match s0.index_of(*id) {
                    Some(i) => Some((i, *r)),
                    None => {
                        done = true;
                        None
                    }
                })
                .collect()
        })
        .collect();
    let u = goal_universe(g);
    let universe: Vec<RegionSet> = ids
        .iter()
        .map(|id| u.get(id).copied().unwrap_or_default())
        .collect();
    let places = universe
        .iter()
        .map(|&mask| {
            let mut opts = Vec::new();
            // every submask of the mentioned regions, largest first
            let mut sub = mask.0;
            loop {
                let incl = RegionSet(sub);
                let excl = mask.minus(incl);
                if realizable(incl, excl) {
                    opts.push((incl, excl));
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask.0;
            }
            opts
        })
        .collect();
    let k = goal.len();
    let mut chain = vec![0usize; k + 1];
    for i in (0..k.saturating_sub(1)).rev() {
        chain[i] = chain[i + 1] + conj_diff(&goal[i], &goal[i + 1], &universe);
    }
    let hand = match s0.hand {
        Hand::Empty => None,
        Hand::Holding(i) => Some(i),
    };
    let mut stream = SkeletonStream {
        ids,
        goal,
        universe,
        places,
        chain,
        nodes: Vec::new(),
        open: BinaryHeap::new(),
        counter: 0,
        expansions: 0,
        max_depth: params.max_depth.unwrap_or(2 * (n + 2)),
        params,
        out: VecDeque::new(),
        done,
    };
    if !stream.done {
        let mut root = Node {
            parent: None,
            op: None,
            atoms: s0.atoms.clone().into_boxed_slice(),
            hand,
            stage: 0,
            depth: 0,
        };
        root.stage = stream.advance(&root.atoms, 0);
        stream.push(root);
    }
    stream
}

fn mask_of(c: &[(usize, RegionSet)], i: usize) -> RegionSet {
    c.iter()
        .find(|(j, _)| *j == i)
        .map(|(_, r)| *r)
        .unwrap_or_default()
}

fn conj_diff(a: &[(usize, RegionSet)], b: &[(usize, RegionSet)], universe: &[RegionSet]) -> usize {
    (0..universe.len())
        .map(|i| (mask_of(a, i).0 ^ mask_of(b, i).0).count_ones() as usize)
        .sum()
}

impl SkeletonStream {
    fn holds(&self, atoms: &[RegionSet], stage: usize) -> bool {
        self.goal[stage].iter().all(|(i, r)| r.is_subset(atoms[*i]))
    }

    fn advance(&self, atoms: &[RegionSet], mut stage: usize) -> usize {
        while stage < self.goal.len() && self.holds(atoms, stage) {
            stage += 1;
        }
        stage
    }

    fn heuristic(&self, atoms: &[RegionSet], stage: usize) -> i64 {
        let k = self.goal.len();
        let st = stage.min(k - 1);
        let g = &self.goal[st];
        let state_part: usize = (0..atoms.len())
            .map(|i| {
                let have = atoms[i].intersect(self.universe[i]);
                (have.0 ^ mask_of(g, i).0).count_ones() as usize
            })
            .sum();
        state_part as i64 + self.chain[st] as i64 - stage as i64
    }

    fn push(&mut self, node: Node) {
        let f = node.depth as i64 + self.heuristic(&node.atoms, node.stage);
        let idx = self.nodes.len();
        self.nodes.push(node);
        self.open.push(Reverse((f, self.counter, idx)));
        self.counter += 1;
    }

    fn is_goal(&self, n: &Node) -> bool {
        n.hand.is_none() && n.stage == self.goal.len() && self.holds(&n.atoms, self.goal.len() - 1)
    }

    fn skeleton(&self, mut idx: usize) -> Skeleton {
        let mut ops = Vec::new();
        while let Some(op) = &self.nodes[idx].op {
            ops.push(op.clone());
            idx = self.nodes[idx].parent.expect("non-root has a parent");
        }
        ops.reverse();
        ops
    }

    fn expand(&mut self, idx: usize) {
        let (depth, hand, stage) = {
            let n = &self.nodes[idx];
            (n.depth, n.hand, n.stage)
        };
        if depth >= self.max_depth {
            return;
        }
        match hand {
            None => {
                for i in 0..self.ids.len() {
                    let atoms = self.nodes[idx].atoms.clone();
                    self.push(Node {
                        parent: Some(idx),
                        op: Some(Op::Pick { obj: self.ids[i] }),
                        atoms,
                        hand: Some(i),
                        stage,
                        depth: depth + 1,
                    });
                }
            }
            Some(i) => {
                for pi in 0..self.places[i].len() {
                    let (incl, excl) = self.places[i][pi];
                    let mut atoms = self.nodes[idx].atoms.clone();
                    atoms[i] = atoms[i].minus(incl.union(excl)).union(incl);
                    let st = self.advance(&atoms, stage);
                    self.push(Node {
                        parent: Some(idx),
                        op: Some(Op::Place {
                            obj: self.ids[i],
                            incl,
                            excl,
                        }),
                        atoms,
                        hand: None,
                        stage: st,
                        depth: depth + 1,
                    });
                }
            }
        }
    }

    /// Run A* until one goal node is popped; `None` once the tree or budget is exhausted.
    fn next_raw(&mut self) -> Option<Skeleton> {
        while !self.done {
            let Some(Reverse((_, _, idx))) = self.open.pop() else {
                self.done = true;
                break;
            };
            if self.expansions >= self.params.max_expansions {
                self.done = true;
                break;
            }
            self.expansions += 1;
            let goal = self.is_goal(&self.nodes[idx]);
            self.expand(idx);
            if goal {
                return Some(self.skeleton(idx));
            }
        }
        None
    }

    pub fn expansions(&self) -> usize {
        self.expansions
    }
}

impl Iterator for SkeletonStream {
    type Item = Skeleton;

    fn next(&mut self) -> Option<Skeleton> {
        if self.out.is_empty() {
            let mut window = Vec::new();
            while window.len() < self.params.window.max(1) {
                match self.next_raw() {
                    Some(sk) => window.push(sk),
                    None => break,
                }
            }
            window.sort_by_key(Vec::len);
            self.out.extend(window);
        }
        self.out.pop_front()
    }
}
