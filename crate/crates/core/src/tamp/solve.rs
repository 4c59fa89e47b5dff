use super::refine::{refine, RefineParams, Refined};
use super::search::{symbolic_search, SearchParams};
use super::{instantiates, skeleton_string, Skeleton, TampError};
use crate::dsl::Conj;
use crate::world::{perceive, WorldState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// `c_min - (c_max - c_min) / (n - 1) * delta^(-1/n)`; `-inf` below two samples.
pub fn lcb(c_min: f64, c_max: f64, n: usize, delta: f64) -> f64 {
    if n < 2 {
        return f64::NEG_INFINITY;
    }
    if c_max == c_min {
        return c_min;
    }
    c_min - (c_max - c_min) / (n - 1) as f64 * delta.powf(-1.0 / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub skeleton: Skeleton,
    /// Successful refinements.
    pub n: usize,
    pub pulls: usize,
    pub consecutive_failures: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub retired: bool,
}

impl ArmStats {
    pub fn new(skeleton: Skeleton) -> ArmStats {
        ArmStats {
            skeleton,
            n: 0,
            pulls: 0,
            consecutive_failures: 0,
            c_min: f64::INFINITY,
            c_max: f64::NEG_INFINITY,
            retired: false,
        }
    }

    pub fn lcb(&self, delta: f64) -> f64 {
        lcb(self.c_min, self.c_max, self.n, delta)
    }

    pub fn feasible(&self) -> bool {
        self.n > 0
    }
}

/// Minimum-cost arm selection by lower confidence bound.
#[derive(Clone, Debug)]
pub struct Bandit {
    pub arms: Vec<ArmStats>,
    pub delta: f64,
    pub retire_after: usize,
}

impl Bandit {
    pub fn new(delta: f64, retire_after: usize) -> Bandit {
        Bandit {
            arms: Vec::new(),
            delta,
            retire_after,
        }
    }

    pub fn add(&mut self, skeleton: Skeleton) -> usize {
        self.arms.push(ArmStats::new(skeleton));
        self.arms.len() - 1
    }

    /// Active arm with the smallest LCB; the lowest index wins ties.
    pub fn select(&self) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, a) in self.arms.iter().enumerate() {
            if a.retired {
                continue;
            }
            let v = a.lcb(self.delta);
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, i));
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn update(&mut self, arm: usize, cost: Option<f64>) {
        let a = &mut self.arms[arm];
        a.pulls += 1;
        match cost {
            Some(c) => {
                a.n += 1;
                a.consecutive_failures = 0;
                a.c_min = a.c_min.min(c);
                a.c_max = a.c_max.max(c);
            }
            None => {
                a.consecutive_failures += 1;
                if a.consecutive_failures >= self.retire_after {
                    a.retired = true;
                }
            }
        }
    }

    pub fn feasible(&self) -> usize {
        self.arms.iter().filter(|a| a.feasible()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveProfile {
    /// Feasible skeletons to collect before the window closes.
    pub max_candidates: usize,
    /// Refinement calls, admissions included.
    pub solve_iterations: usize,
    pub delta: f64,
    /// Consecutive failed refinements that retire an arm.
    pub retire_after: usize,
    pub search: SearchParams,
    pub refine: RefineParams,
}

impl SolveProfile {
    /// Budget used when scoring hypotheses.
    pub fn rationality() -> SolveProfile {
        SolveProfile {
            max_candidates: 5,
            solve_iterations: 20,
            delta: 0.05,
            retire_after: 3,
            search: SearchParams::default(),
            refine: RefineParams::default(),
        }
    }

    /// Budget used when acting.
    pub fn forward() -> SolveProfile {
        SolveProfile {
            max_candidates: 10,
            solve_iterations: 100,
            ..SolveProfile::rationality()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub arms: Vec<ArmStats>,
    /// Cheapest refinement found per arm.
    pub refinements: Vec<Option<Refined>>,
    pub winner: Option<usize>,
    pub iterations: usize,
}

impl SolveOutcome {
    pub fn best(&self) -> Option<(&Skeleton, &Refined)> {
        let w = self.winner?;
        Some((&self.arms[w].skeleton, self.refinements[w].as_ref()?))
    }

    pub fn report(&self, delta: f64, trajectory_ref: Option<String>) -> SolveReport {
        SolveReport {
            plans: self
                .arms
                .iter()
                .map(|a| PlanReport {
                    skeleton: skeleton_string(&a.skeleton),
                    n: a.n,
                    c_min: a.feasible().then_some(a.c_min),
                    c_max: a.feasible().then_some(a.c_max),
                    lcb: Some(a.lcb(delta)).filter(|v| v.is_finite()),
                })
                .collect(),
            winner: self.winner,
            cost: self.best().map(|(_, r)| r.cost),
            trajectory_ref,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub skeleton: String,
    pub n: usize,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub lcb: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub plans: Vec<PlanReport>,
    pub winner: Option<usize>,
    pub cost: Option<f64>,
    pub trajectory_ref: Option<String>,
}

/// Seed of an arm's private sample stream: a hash of the master seed and the skeleton.
pub fn arm_seed(master: u64, skeleton: &[super::Op]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(skeleton_string(skeleton).as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

struct Arms<'a> {
    w0: &'a WorldState,
    params: &'a RefineParams,
    master: u64,
    bandit: Bandit,
    rngs: Vec<ChaCha8Rng>,
    best: Vec<Option<Refined>>,
}

impl Arms<'_> {
    fn admit(&mut self, sk: Skeleton) -> usize {
        self.rngs
            .push(ChaCha8Rng::seed_from_u64(arm_seed(self.master, &sk)));
        self.best.push(None);
        self.bandit.add(sk)
    }

    fn pull(&mut self, arm: usize) {
        let r = refine(
            &self.bandit.arms[arm].skeleton,
            self.w0,
            self.params,
            &mut self.rngs[arm],
        );
        self.bandit.update(arm, r.as_ref().map(|r| r.cost));
        if let Some(r) = r {
            if self.best[arm].as_ref().is_none_or(|b| r.cost < b.cost) {
                self.best[arm] = Some(r);
            }
        }
    }
}

/// Bandit-allocated refinement over the skeleton stream. Returns every arm's statistics and
/// the cheapest refinement overall.
pub fn solve(
    w0: &WorldState,
    g: &[Conj],
    profile: &SolveProfile,
    seed: u64,
) -> Result<SolveOutcome, TampError> {
    solve_with_observed(w0, g, &[], profile, seed)
}

/// As [`solve`], with the given skeletons admitted as arms before the stream is consulted.
/// Stream skeletons that an observed skeleton narrows are skipped.
pub fn solve_with_observed(
    w0: &WorldState,
    g: &[Conj],
    observed: &[Skeleton],
    profile: &SolveProfile,
    seed: u64,
) -> Result<SolveOutcome, TampError> {
    let s0 = perceive(w0);
    let mut stream = symbolic_search(&s0, g, profile.search.clone());
    let mut arms = Arms {
        w0,
        params: &profile.refine,
        master: seed,
        bandit: Bandit::new(profile.delta, profile.retire_after),
        rngs: Vec::new(),
        best: Vec::new(),
    };
    let mut iterations = 0;
    for sk in observed {
        if arms.bandit.arms.iter().any(|a| &a.skeleton == sk) {
            continue;
        }
        let a = arms.admit(sk.clone());
        arms.pull(a);
        iterations += 1;
    }
    let mut exhausted = false;
    while iterations < profile.solve_iterations {
        let selected = arms.bandit.select();
        if !exhausted && (arms.bandit.feasible() < profile.max_candidates || selected.is_none()) {
            match stream.next() {
                Some(sk) => {
                    // an observed skeleton already stands in for any skeleton it narrows
                    let known = arms.bandit.arms.iter().any(|a| a.skeleton == sk)
                        || observed.iter().any(|o| instantiates(o, &sk));
                    if !known {
                        let a = arms.admit(sk);
                        arms.pull(a);
                        iterations += 1;
                    }
                    continue;
                }
                None => {
                    exhausted = true;
                    continue;
                }
            }
        }
        let Some(a) = selected else { break };
        arms.pull(a);
        iterations += 1;
    }
    let winner = arms
        .best
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().map(|r| (r.cost, i)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i);
    if winner.is_none() && observed.is_empty() {
        return Err(TampError::NoPlanFound);
    }
    Ok(SolveOutcome {
        arms: arms.bandit.arms,
        refinements: arms.best,
        winner,
        iterations,
    })
}
