use super::*;
use crate::dsl::{Cond, Goal, Measure, Order, Pred, Selector};
use crate::world::{Color, Hand, ObjectFacts, RegionSet, Shape, ShapeClass, CELLS};
use std::collections::BTreeSet;
use std::sync::Arc;

fn facts(id: u32, color: Color, shape: Shape) -> ObjectFacts {
    ObjectFacts {
        id,
        color,
        shape,
        area: shape.area(),
        perimeter: shape.perimeter(),
        extent: shape.extent(),
    }
}

fn state(objs: Vec<ObjectFacts>, atoms: Vec<RegionSet>) -> SymbolicState {
    SymbolicState {
        objects: Arc::new(objs),
        atoms,
        hand: Hand::Empty,
    }
}

fn ctx(initial: Vec<SymbolicState>, demos: Vec<SymbolicTrajectory>, n: usize) -> ProposalContext {
    ProposalContext {
        initial_states: initial,
        demos,
        hypotheses: vec![],
        history: vec![],
        n,
    }
}

fn trivial_world() -> SymbolicState {
    state(
        vec![facts(1, Color::Red, Shape::Circle { radius: 0.04 })],
        vec![CELLS[0]],
    )
}

#[test]
fn first_program_sends_everything_to_the_middle() {
    let mut p = EnumerativeProposer::new(EnumConfig::default());
    let out = p.propose(&ctx(vec![trivial_world()], vec![], 1)).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].to_string(), "(achieve (for all (at Middle)))");
}

#[test]
fn known_programs_are_not_proposed_again() {
    let mut p = EnumerativeProposer::new(EnumConfig::default());
    let mut c = ctx(vec![trivial_world()], vec![], 3);
    let first = p.propose(&c).unwrap();
    c.history = first
        .iter()
        .map(|e| ScoredProgram {
            program: e.clone(),
            score: 0.1,
        })
        .collect();
    let second = p.propose(&c).unwrap();
    for e in &second {
        assert!(!first.contains(e));
    }
}

#[test]
fn seeded_enumeration_is_reproducible() {
    let c = ctx(vec![trivial_world()], vec![], 25);
    let run = |seed| {
        let mut p = EnumerativeProposer::new(EnumConfig {
            seed,
            ..EnumConfig::default()
        });
        p.propose(&c).unwrap()
    };
    assert_eq!(run(Some(4)), run(Some(4)));
    assert_eq!(run(None), run(None));
    assert_ne!(run(Some(4)), run(None));
}

#[test]
fn proposals_come_in_nondecreasing_size_and_validate() {
    let mut p = EnumerativeProposer::new(EnumConfig {
        seed: Some(9),
        ..EnumConfig::default()
    });
    let out = p.propose(&ctx(vec![trivial_world()], vec![], 400)).unwrap();
    assert_eq!(out.len(), 400);
    assert!(out.windows(2).all(|w| w[0].size() <= w[1].size()));
    assert!(out.iter().all(|e| e.validate().is_ok()));
}

#[test]
fn small_cap_reports_exhaustion_with_the_partial_list() {
    let mut p = EnumerativeProposer::new(EnumConfig {
        size_cap: 3,
        ..EnumConfig::default()
    });
    match p.propose(&ctx(vec![trivial_world()], vec![], 100)) {
        Err(ProposerError::GrammarExhausted { partial }) => assert_eq!(partial.len(), 6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn consistency_filter_reads_the_demonstration() {
    let objs = vec![
        facts(1, Color::Red, Shape::Circle { radius: 0.04 }),
        facts(2, Color::Blue, Shape::Triangle { side: 0.08 }),
    ];
    let left_bottom = RegionSet(
        CELLS
            .iter()
            .find(|c| c.contains(crate::world::Region::Left))
            .unwrap()
            .0,
    );
    let right = CELLS
        .iter()
        .find(|c| c.contains(crate::world::Region::Right))
        .copied()
        .unwrap();
    let middle = CELLS
        .iter()
        .find(|c| c.contains(crate::world::Region::Middle))
        .copied()
        .unwrap();
    let s0 = state(objs.clone(), vec![left_bottom, right]);
    let mut s1 = s0.clone();
    s1.atoms[0] = middle;
    let demo = SymbolicTrajectory::from_states(vec![s0.clone(), s1]);
    let mut p = EnumerativeProposer::new(EnumConfig::default());
    let out = p.propose(&ctx(vec![s0], vec![demo.clone()], 5)).unwrap();
    for e in &out {
        assert!(consistent(e, std::slice::from_ref(&demo)), "{e}");
    }
    // everything to Middle is contradicted by the triangle staying put
    assert!(out
        .iter()
        .all(|e| e.to_string() != "(achieve (for all (at Middle)))"));
    assert!(out
        .iter()
        .any(|e| e.to_string() == "(achieve (for (filter (color red)) (at Middle)))"));
}

// ---- brute-force grammar expansion, independent of the tables ----

fn bf_preds(s: usize) -> Vec<Pred> {
    let mut out = Vec::new();
    if s == 1 {
        out.extend(Color::ALL.map(Pred::Color));
        out.extend(ShapeClass::ALL.map(Pred::Shape));
        out.extend(Measure::ALL.map(Pred::Big));
        out.extend(Measure::ALL.map(Pred::Small));
    }
    if s >= 2 {
        out.extend(bf_preds(s - 1).into_iter().map(Pred::not));
    }
    for sa in 1..s.saturating_sub(1) {
        for a in bf_preds(sa) {
            for b in bf_preds(s - 1 - sa) {
                out.push(Pred::and(a.clone(), b.clone()));
                out.push(Pred::or(a.clone(), b.clone()));
            }
        }
    }
    out.retain(canonical_pred);
    out
}

fn bf_sels(s: usize) -> Vec<Selector> {
    let mut out = Vec::new();
    if s == 1 {
        out.push(Selector::All);
    }
    if s >= 2 {
        out.extend(bf_preds(s - 1).into_iter().map(Selector::Filter));
        for x in bf_sels(s - 1) {
            out.push(Selector::MostNumerousShape(Box::new(x.clone())));
            out.push(Selector::OddColor(Box::new(x)));
        }
    }
    if s >= 3 {
        for x in bf_sels(s - 2) {
            for m in Measure::ALL {
                out.push(Selector::Largest(m, Box::new(x.clone())));
                out.push(Selector::Smallest(m, Box::new(x.clone())));
            }
        }
    }
    for sa in 1..s.saturating_sub(1) {
        for a in bf_sels(sa) {
            for b in bf_sels(s - 1 - sa) {
                if a != b {
                    out.push(Selector::Except(Box::new(a.clone()), Box::new(b)));
                }
            }
        }
    }
    out
}

fn legal_places(k: usize) -> Vec<RegionSet> {
    (1..64u8)
        .map(RegionSet)
        .filter(|r| r.len() == k && r.legal_goal())
        .collect()
}

fn bf_goals(s: usize) -> Vec<Goal> {
    let mut out = Vec::new();
    for k in 1..s {
        for sel in bf_sels(s - k) {
            for p in legal_places(k) {
                out.push(Goal::new(sel.clone(), p));
            }
        }
    }
    out
}

fn bf_conds(s: usize) -> Vec<Cond> {
    let mut out = Vec::new();
    if s >= 2 {
        out.extend(bf_sels(s - 1).into_iter().map(Cond::Exists));
    }
    if s >= 3 {
        for x in bf_sels(s - 2) {
            for n in COUNT_THRESHOLDS {
                out.push(Cond::CountAtLeast(x.clone(), n));
            }
        }
    }
    out
}

/// Ordered sequences of items whose sizes sum to `total`.
fn sequences<T: Clone>(total: usize, min_len: usize, gen: &dyn Fn(usize) -> Vec<T>) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    if total == 0 {
        if min_len == 0 {
            out.push(vec![]);
        }
        return out;
    }
    for first in 1..=total {
        for x in gen(first) {
            for mut rest in sequences(total - first, min_len.saturating_sub(1), gen) {
                rest.insert(0, x.clone());
                out.push(rest);
            }
        }
    }
    out
}

fn bf_programs(s: usize) -> Vec<Program> {
    let mut out = Vec::new();
    if s < 2 {
        return out;
    }
    for gs in sequences(s - 1, 1, &bf_goals) {
        out.push(Program::Achieve(gs));
    }
    for ss in 1..s.saturating_sub(2) {
        for places in sequences(s - 2 - ss, 2, &legal_places) {
            for sel in bf_sels(ss) {
                for m in Measure::ALL {
                    for o in [Order::Asc, Order::Desc] {
                        out.push(Program::SortBy(m, o, sel.clone(), places.clone()));
                    }
                }
            }
        }
    }
    for sc in 2..s {
        for sa in 1..s {
            if 1 + sc + sa >= s {
                continue;
            }
            for c in bf_conds(sc) {
                for a in bf_programs(sa) {
                    for b in bf_programs(s - 1 - sc - sa) {
                        if a != b {
                            out.push(Program::If(c.clone(), Box::new(a.clone()), Box::new(b)));
                        }
                    }
                }
            }
        }
    }
    let non_seq = |k: usize| -> Vec<Program> {
        bf_programs(k)
            .into_iter()
            .filter(|p| !matches!(p, Program::Seq(_)))
            .collect()
    };
    for ts in sequences(s - 1, 2, &non_seq) {
        out.push(Program::Seq(ts));
    }
    out
}

/// Programs up to goal order inside `achieve`; repeated goals are not canonical.
fn key(p: &Program) -> Option<String> {
    match p {
        Program::Achieve(gs) => {
            let mut v: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
            v.sort();
            let n = v.len();
            v.dedup();
            (v.len() == n).then(|| format!("(achieve {})", v.join(" ")))
        }
        Program::Seq(ts) => {
            let parts: Option<Vec<String>> = ts.iter().map(key).collect();
            parts.map(|v| format!("(seq {})", v.join(" ")))
        }
        Program::If(c, a, b) => Some(format!("(if {c} {} {})", key(a)?, key(b)?)),
        other => Some(other.to_string()),
    }
}

#[test]
fn levels_match_brute_force_expansion() {
    let mut g = Grammar::new();
    for s in 1..=6 {
        let ours: Vec<String> = g.programs(s).iter().map(|p| key(p).unwrap()).collect();
        let set: BTreeSet<String> = ours.iter().cloned().collect();
        assert_eq!(set.len(), ours.len(), "duplicates at size {s}");
        let brute: BTreeSet<String> = bf_programs(s).iter().filter_map(key).collect();
        assert_eq!(set, brute, "size {s}");
        assert!(g.programs(s).iter().all(|p| p.size() == s));
    }
}

#[test]
fn middle_leads_each_place_level() {
    assert_eq!(
        places_of_size(1)[0],
        RegionSet::of(&[crate::world::Region::Middle])
    );
    assert!(places_of_size(2).iter().all(|p| p.legal_goal()));
}

// ---- remote ----

fn fixture_dir(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn replayed_response_yields_valid_blocks_and_a_diagnostic() {
    let mut p = RemoteProposer::new(
        RemoteConfig::default(),
        Box::new(ReplayTransport::new(fixture_dir("replay"))),
        &[],
    );
    let out = p.propose(&ctx(vec![trivial_world()], vec![], 4)).unwrap();
    assert_eq!(out.len(), 3);
    let diags = p.take_diagnostics();
    assert_eq!(diags.len(), 1, "{diags:?}");
}

#[test]
fn empty_response_is_a_parse_failure() {
    let (programs, diags) = parse_response("");
    assert!(programs.is_empty() && diags.is_empty());
    let mut p = RemoteProposer::new(
        RemoteConfig::default(),
        Box::new(ReplayTransport::new(fixture_dir("replay_empty"))),
        &[],
    );
    assert!(matches!(
        p.propose(&ctx(vec![trivial_world()], vec![], 4)),
        Err(ProposerError::ParseFailure(_))
    ));
}

#[test]
fn missing_credential_is_reported_before_any_request() {
    let cfg = RemoteConfig {
        endpoint: "http://127.0.0.1:9/unreachable".into(),
        credential_var: "RATIONALE_TEST_CREDENTIAL_NEVER_SET".into(),
        ..RemoteConfig::default()
    };
    match RemoteProposer::http(cfg, &[]) {
        Err(ProposerError::AuthMissing(v)) => assert_eq!(v, "RATIONALE_TEST_CREDENTIAL_NEVER_SET"),
        Err(e) => panic!("{e}"),
        Ok(_) => panic!("expected AuthMissing"),
    }
}

#[test]
fn fenced_blocks_ignore_unclosed_fences() {
    let text = "intro\n```lisp\n(a)\n```\nmiddle\n```\n(b)\n```\n```\n(c)";
    assert_eq!(
        fenced_blocks(text),
        vec!["(a)".to_string(), "(b)".to_string()]
    );
}

#[test]
fn request_carries_frames_and_feedback() {
    use crate::world::{rollout, Action, Config, Pose, Scene, WorldState};
    let scene = Arc::new(Scene::new(
        Config::default(),
        vec![(1, Shape::Circle { radius: 0.04 }, Color::Red)],
    ));
    let w = WorldState::new(scene, vec![Pose::new(0.3, 0.3, 0.0)], (0.7, 0.7));
    let actions: Vec<Action> = (0..25)
        .map(|k| Action::new(0.7 - 0.01 * k as f64, 0.7, false))
        .collect();
    let tau = rollout(&w, &actions);
    let p = RemoteProposer::new(
        RemoteConfig::default(),
        Box::new(ReplayTransport::new(fixture_dir("replay"))),
        &[tau],
    );
    let mut c = ctx(vec![trivial_world()], vec![], 10);
    c.hypotheses.push(ScoredProgram {
        program: Program::parse("(achieve (for all (at Left)))").unwrap(),
        score: 0.75,
    });
    let body = p.request(&c);
    let content = body["messages"][1]["content"].as_array().unwrap();
    let images = content.iter().filter(|c| c["type"] == "image_url").count();
    // frames 0, 10, 20 and the terminal frame 25
    assert_eq!(images, 4);
    let text = content.last().unwrap()["text"].as_str().unwrap();
    assert!(text.contains("0.7500  (achieve (for all (at Left)))"));
}
