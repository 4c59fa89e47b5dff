use super::*;
use crate::proposer::FixedProposer;
use crate::tamp::{solve, SolveProfile};
use crate::world::{rollout, Color, Config, Pose, Region, RegionSet, Scene, Shape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

// ---- generic segmentation against a definition-level oracle ----

/// Literal test on a 3-bit state: bit `b` must equal `v`; `None` is always true.
#[derive(Clone, Copy, Debug)]
struct Lit(Option<(u8, bool)>);

impl Lit {
    fn test(self, s: u8) -> bool {
        self.0.is_none_or(|(b, v)| ((s >> b) & 1 == 1) == v)
    }
}

#[derive(Clone, Copy, Debug)]
struct ToyOp {
    pre: Lit,
    eff: Lit,
    mnt: Lit,
}

impl Schema<u8> for ToyOp {
    fn pre(&self, s: &u8) -> bool {
        self.pre.test(*s)
    }
    fn eff(&self, s: &u8) -> bool {
        self.eff.test(*s)
    }
    fn mnt(&self, s: &u8) -> bool {
        self.mnt.test(*s)
    }
}

fn is_segment(states: &[u8], op: &ToyOp, i: usize, k: usize) -> bool {
    i < k
        && op.pre(&states[i])
        && op.eff(&states[k])
        && (i + 1..k).all(|j| !op.eff(&states[j]) && op.mnt(&states[j]))
}

fn brute_force(states: &[u8], ops: &[ToyOp]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    fn go(
        states: &[u8],
        ops: &[ToyOp],
        at: usize,
        acc: &mut (Vec<usize>, Vec<usize>),
        out: &mut BTreeSet<(Vec<usize>, Vec<usize>)>,
    ) {
        let mut extended = false;
        for (o, op) in ops.iter().enumerate() {
            for k in at + 1..states.len() {
                if is_segment(states, op, at, k) {
                    extended = true;
                    acc.0.push(o);
                    acc.1.push(k);
                    go(states, ops, k, acc, out);
                    acc.0.pop();
                    acc.1.pop();
                }
            }
        }
        if !extended {
            out.insert(acc.clone());
        }
    }
    let mut out = BTreeSet::new();
    go(states, ops, 0, &mut (vec![], vec![0]), &mut out);
    out
}

fn random_lit(rng: &mut ChaCha8Rng, p_none: f64) -> Lit {
    if rng.gen_bool(p_none) {
        Lit(None)
    } else {
        Lit(Some((rng.gen_range(0..3), rng.gen_bool(0.5))))
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<ToyOp>) {
    let t = rng.gen_range(1..=8);
    let mut states: Vec<u8> = Vec::new();
    while states.len() < t {
        let s = rng.gen_range(0..8u8);
        if states.last() != Some(&s) {
            states.push(s);
        }
    }
    let b = rng.gen_range(1..=3);
    let ops = (0..b)
        .map(|_| ToyOp {
            pre: random_lit(rng, 0.2),
            eff: random_lit(rng, 0.0),
            mnt: random_lit(rng, 0.4),
        })
        .collect();
    (states, ops)
}

fn prefix_free(plans: &[MaximalPlan]) -> bool {
    plans.iter().all(|a| {
        plans.iter().all(|b| {
            a == b
                || b.ops.len() <= a.ops.len()
                || b.ops[..a.ops.len()] != a.ops[..]
                || b.bounds[..a.bounds.len()] != a.bounds[..]
        })
    })
}

#[test]
fn maximal_plans_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let (states, ops) = random_instance(&mut rng);
        let got = maximal_plans(&states, &ops);
        let set: BTreeSet<(Vec<usize>, Vec<usize>)> = got
            .iter()
            .map(|p| (p.ops.clone(), p.bounds.clone()))
            .collect();
        assert_eq!(set.len(), got.len());
        assert_eq!(set, brute_force(&states, &ops), "{states:?} {ops:?}");
        assert!(prefix_free(&got));
    }
}

#[test]
fn no_precondition_means_no_segments() {
    let op = ToyOp {
        pre: Lit(Some((0, true))),
        eff: Lit(Some((1, true))),
        mnt: Lit(None),
    };
    let states = [0b000u8, 0b010, 0b100];
    assert!(discover_segments(&states, &[op]).iter().all(Vec::is_empty));
    let plans = maximal_plans(&states, &[op]);
    assert_eq!(plans.len(), 1);
    assert!(plans[0].ops.is_empty());
}

#[test]
fn three_segment_chain_is_the_only_plan() {
    // bit0 -> bit1 -> bit2 -> bit0, each operator fires once
    let ops = [
        ToyOp {
            pre: Lit(Some((0, true))),
            eff: Lit(Some((1, true))),
            mnt: Lit(None),
        },
        ToyOp {
            pre: Lit(Some((1, true))),
            eff: Lit(Some((2, true))),
            mnt: Lit(None),
        },
        ToyOp {
            pre: Lit(Some((2, true))),
            eff: Lit(Some((0, true))),
            mnt: Lit(None),
        },
    ];
    let states = [0b001u8, 0b010, 0b100, 0b001];
    let plans = maximal_plans(&states, &ops);
    assert_eq!(plans.len(), 1);
    assert_eq!(plans[0].ops, vec![0, 1, 2]);
    assert_eq!(plans[0].bounds, vec![0, 1, 2, 3]);
    assert_eq!(brute_force(&states, &ops).len(), 1);
}

// ---- the pick-and-place schemas ----

fn sym(hands: &[Hand], cells: &[RegionSet]) -> Vec<SymbolicState> {
    let w = two_object_world();
    let base = perceive(&w);
    hands
        .iter()
        .zip(cells)
        .map(|(h, c)| {
            let mut s = base.clone();
            s.hand = *h;
            s.atoms[0] = *c;
            s
        })
        .collect()
}

fn left() -> RegionSet {
    RegionSet::of(&[Region::Left, Region::Bottom])
}

fn right() -> RegionSet {
    RegionSet::of(&[Region::Right, Region::Bottom])
}

#[test]
fn clean_pick_ends_at_the_first_holding_state() {
    let states = sym(
        &[
            Hand::Empty,
            Hand::Holding(0),
            Hand::Holding(0),
            Hand::Holding(0),
            Hand::Empty,
        ],
        &[
            right(),
            right(),
            RegionSet::of(&[Region::Right, Region::Top]),
            left(),
            left(),
        ],
    );
    let ops = domain_ops(2);
    let segs = discover_segments(&states, &ops);
    let picks: Vec<&Segment> = segs[0].iter().collect();
    assert_eq!(picks.len(), 1);
    assert_eq!(picks[0].end, 1);
    assert_eq!(ops[picks[0].op], DomainOp::Pick(0));
    let st = SymbolicTrajectory {
        states: states.clone(),
        frames: (0..5).collect(),
    };
    let sks = demo_skeletons(&st);
    assert_eq!(sks.len(), 1);
    assert_eq!(sks[0], vec![Op::Pick { obj: 1 }, cell_place(1, left())]);
}

#[test]
fn early_release_breaks_the_place_span() {
    // holding object 0, then object 1 without an empty hand in between
    let mut states = sym(
        &[Hand::Holding(0), Hand::Holding(0), Hand::Holding(1)],
        &[right(), left(), left()],
    );
    states[2].hand = Hand::Holding(1);
    let segs = discover_segments(&states, &domain_ops(2));
    assert!(segs[0].is_empty());
}

fn two_object_world() -> WorldState {
    let scene = Scene::new(
        Config::default(),
        vec![
            (1, Shape::Circle { radius: 0.04 }, Color::Red),
            (
                2,
                Shape::Box {
                    width: 0.08,
                    height: 0.08,
                },
                Color::Blue,
            ),
        ],
    );
    WorldState::new(
        Arc::new(scene),
        vec![Pose::new(0.75, 0.3, 0.0), Pose::new(0.3, 0.7, 0.0)],
        (0.5, 0.5),
    )
}

fn red_left() -> Program {
    Program::parse("(achieve (for (filter (color red)) (at Left)))").unwrap()
}

fn demo(e: &Program, seed: u64) -> (Skeleton, Trajectory) {
    let w = two_object_world();
    let g = eval(e, &perceive(&w)).unwrap();
    let out = solve(&w, &g, &SolveProfile::forward(), seed).unwrap();
    let (sk, r) = out.best().unwrap();
    (sk.clone(), r.trajectory.clone())
}

#[test]
fn stationary_trajectory_abstracts_to_one_state() {
    let w = two_object_world();
    let tau = rollout(&w, &[crate::world::Action::new(0.5, 0.5, false); 5]);
    let st = abstract_trajectory(&tau);
    assert_eq!(st.len(), 1);
    assert_eq!(st.frames, vec![0]);
    assert!(plan_satisfies(&[], &tau));
    assert_eq!(demo_skeletons(&st), vec![Vec::<Op>::new()]);
}

#[test]
fn pick_place_demo_reads_back_its_skeleton() {
    let e = red_left();
    let (sk, tau) = demo(&e, 1);
    let st = abstract_trajectory(&tau);
    let hands: Vec<Hand> = st.states.iter().map(|s| s.hand).collect();
    assert!(hands
        .windows(3)
        .any(|w| w == [Hand::Empty, Hand::Holding(0), Hand::Holding(0)]
            || w == [Hand::Empty, Hand::Holding(0), Hand::Empty]));
    assert_eq!(*hands.last().unwrap(), Hand::Empty);
    assert!(plan_satisfies(&sk, &tau));
    let wrong: Skeleton = sk
        .iter()
        .map(|op| match op {
            Op::Place { obj, .. } => Op::Place {
                obj: *obj,
                incl: RegionSet::of(&[Region::Right]),
                excl: RegionSet::EMPTY,
            },
            other => other.clone(),
        })
        .collect();
    assert!(!plan_satisfies(&wrong, &tau));
    // replaying the actions abstracts identically
    let replay = rollout(tau.initial(), &tau.actions);
    assert_eq!(abstract_trajectory(&replay), st);
}

// ---- choice rule ----

#[test]
fn boltzmann_examples() {
    assert_eq!(boltzmann(&[42.0], 0.05), vec![1.0]);
    let p = boltzmann(&[7.0, 7.0], 0.05);
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    let p = boltzmann(&[100.0, 180.0], 0.05);
    let a = (-5f64).exp() / ((-5f64).exp() + (-9f64).exp());
    assert!((p[0] - a).abs() < 1e-12);
    assert!((p[0] - 0.9820).abs() < 1e-3 && (p[1] - 0.0180).abs() < 1e-3);
    assert_eq!(boltzmann(&[f64::INFINITY, 3.0], 1.0), vec![0.0, 1.0]);
    assert_eq!(boltzmann(&[f64::INFINITY], 1.0), vec![0.0]);
}

#[test]
fn boltzmann_approaches_uniform_over_feasible_as_beta_vanishes() {
    let costs = [120.0, 400.0, f64::INFINITY, 95.0, f64::INFINITY];
    let dev = |beta: f64| {
        boltzmann(&costs, beta)
            .iter()
            .zip(&costs)
            .map(|(p, c)| (p - if c.is_finite() { 1.0 / 3.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    };
    let d: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&b| dev(b)).collect();
    assert!(d[0] > d[1] && d[1] > d[2]);
    assert!(d[2] < 1e-4);
}

proptest! {
    #[test]
    fn boltzmann_sums_to_one(costs in prop::collection::vec(0.0f64..5000.0, 1..12), beta in 1e-4f64..1.0) {
        let s: f64 = boltzmann(&costs, beta).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn boltzmann_ignores_a_common_shift(costs in prop::collection::vec(0.0f64..500.0, 1..8), shift in -100.0f64..100.0) {
        let a = boltzmann(&costs, 0.05);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let b = boltzmann(&shifted, 0.05);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

// ---- likelihoods and posterior ----

#[test]
fn ground_truth_explains_its_own_demo() {
    let e = red_left();
    let (_, tau) = demo(&e, 2);
    let params = RationalityParams::default();
    assert!(demo_likelihood(&e, &tau, &params) > 0.0);
    // never reached in the demo
    let other = Program::parse("(achieve (for (filter (color blue)) (at Right)))").unwrap();
    assert_eq!(demo_likelihood(&other, &tau, &params), 0.0);
}

#[test]
fn observed_selection_mass_is_at_most_one() {
    let e = red_left();
    let (_, tau) = demo(&e, 3);
    let view = DemoView::new(tau);
    let g = eval(&e, view.symbolic.initial()).unwrap();
    let sel = plan_selection_likelihood(
        &g,
        &view.skeletons,
        view.trajectory.initial(),
        &RationalityParams::default(),
    )
    .unwrap();
    let mass: f64 = sel.observed.iter().map(|(_, p)| p).sum();
    assert!(mass > 0.0 && mass <= 1.0 + 1e-12);
    let all = boltzmann(&sel.costs.iter().map(|(_, c)| *c).collect::<Vec<_>>(), 0.05);
    assert!((all.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn posterior_basics() {
    let e = red_left();
    let (_, t1) = demo(&e, 4);
    let (_, t2) = demo(&e, 5);
    let params = RationalityParams::default();
    let single = posterior(std::slice::from_ref(&e), std::slice::from_ref(&t1), &params);
    assert_eq!(single.hypotheses[0].weight, 1.0);
    let dup = posterior(&[e.clone(), e.clone()], std::slice::from_ref(&t1), &params);
    assert_eq!(dup.hypotheses[0].weight, dup.hypotheses[1].weight);

    let alt = Program::parse("(achieve (for (filter (shape circle)) (at Left)))").unwrap();
    let far = Program::parse("(achieve (for (filter (color red)) (at Left Bottom)))").unwrap();
    let hs = vec![e.clone(), alt.clone(), far.clone()];
    let a = posterior(&hs, &[t1.clone(), t2.clone()], &params);
    let b = posterior(&hs, &[t2.clone(), t1.clone()], &params);
    let c = posterior(&[far, e.clone(), alt], &[t1.clone(), t2.clone()], &params);
    let weights = |p: &Posterior| -> Vec<(String, f64)> {
        p.hypotheses
            .iter()
            .map(|h| (h.program.to_string(), h.weight))
            .collect()
    };
    for (x, y) in weights(&a).iter().zip(weights(&b)) {
        assert_eq!(x.0, y.0);
        assert!((x.1 - y.1).abs() < 1e-12);
    }
    assert_eq!(weights(&a), weights(&c));
    let total: f64 = a.hypotheses.iter().map(|h| h.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let json = a.to_json();
    let back = Posterior::from_json(&json).unwrap();
    assert_eq!(back.hypotheses.len(), 3);
}

#[test]
fn all_zero_posterior_raises_the_flag() {
    let (_, tau) = demo(&red_left(), 6);
    let never = Program::parse("(achieve (for (filter (color blue)) (at Right)))").unwrap();
    let p = posterior(&[never], &[tau], &RationalityParams::default());
    assert!(p.all_zero);
    assert_eq!(p.hypotheses[0].weight, 0.0);
    assert!(p.map().is_none());
    assert!(p.to_json().contains("null"));
}

#[test]
fn loop_with_a_fixed_proposer_returns_its_program() {
    let e = red_left();
    let (_, tau) = demo(&e, 7);
    let mut prop = FixedProposer(vec![e.clone()]);
    let out = rir_loop(
        &[tau],
        &mut prop,
        &RirParams {
            iterations: 1,
            ..RirParams::default()
        },
        &RationalityParams::default(),
    )
    .unwrap();
    assert_eq!(out.map, Some(e));
    assert_eq!(out.history.len(), 1);
}

#[test]
fn failing_proposer_surfaces_with_an_empty_partial() {
    struct Broken;
    impl crate::proposer::Proposer for Broken {
        fn propose(
            &mut self,
            _: &crate::proposer::ProposalContext,
        ) -> Result<Vec<Program>, crate::proposer::ProposerError> {
            Err(crate::proposer::ProposerError::Transport("down".into()))
        }
    }
    let (_, tau) = demo(&red_left(), 8);
    match rir_loop(
        &[tau],
        &mut Broken,
        &RirParams::default(),
        &RationalityParams::default(),
    ) {
        Err(RirError::ProposerFailure { partial, .. }) => {
            assert!(partial.posterior.hypotheses.is_empty());
            assert_eq!(partial.history.len(), 3);
        }
        Ok(_) => panic!("expected a proposer failure"),
    }
}
