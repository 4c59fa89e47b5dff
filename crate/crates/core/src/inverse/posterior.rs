use super::{DemoView, RationalityParams, Scorer};
use crate::dsl::Program;
use crate::proposer::{ProposalContext, Proposer, ProposerError, ScoredProgram};
use crate::world::Trajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::{BTreeMap, HashSet};

fn finite_or_null<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    v.iter()
        .map(|x| x.is_finite().then_some(*x))
        .collect::<Vec<_>>()
        .serialize(s)
}

fn null_as_neg_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let v = Vec::<Option<f64>>::deserialize(d)?;
    Ok(v.into_iter()
        .map(|x| x.unwrap_or(f64::NEG_INFINITY))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub program: Program,
    pub log_prior: f64,
    /// One entry per demonstration; `null` in JSON stands for zero likelihood.
    #[serde(
        serialize_with = "finite_or_null",
        deserialize_with = "null_as_neg_inf"
    )]
    pub log_likelihoods: Vec<f64>,
    pub weight: f64,
}

impl Hypothesis {
    pub fn log_joint(&self) -> f64 {
        self.log_prior + self.log_likelihoods.iter().sum::<f64>()
    }
}

/// Hypotheses sorted by weight, heaviest first. When every hypothesis has zero likelihood
/// the weights are all zero and `all_zero` is set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Posterior {
    pub hypotheses: Vec<Hypothesis>,
    pub all_zero: bool,
}

impl Posterior {
    fn from_scored(mut hypotheses: Vec<Hypothesis>) -> Posterior {
        let m = hypotheses
            .iter()
            .map(Hypothesis::log_joint)
            .fold(f64::NEG_INFINITY, f64::max);
        let all_zero = m == f64::NEG_INFINITY;
        if all_zero {
            for h in &mut hypotheses {
                h.weight = 0.0;
            }
        } else {
            let z: f64 = hypotheses.iter().map(|h| (h.log_joint() - m).exp()).sum();
            for h in &mut hypotheses {
                h.weight = (h.log_joint() - m).exp() / z;
            }
        }
        // ties broken by the program text so input order does not matter
        let mut keyed: Vec<(String, Hypothesis)> = hypotheses
            .into_iter()
            .map(|h| (h.program.to_string(), h))
            .collect();
        keyed.sort_by(|a, b| {
            b.1.weight
                .total_cmp(&a.1.weight)
                .then_with(|| a.0.cmp(&b.0))
        });
        Posterior {
            hypotheses: keyed.into_iter().map(|(_, h)| h).collect(),
            all_zero,
        }
    }

    pub fn map(&self) -> Option<&Program> {
        if self.all_zero {
            return None;
        }
        self.hypotheses.first().map(|h| &h.program)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.hypotheses).expect("hypotheses serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Posterior> {
        let hypotheses: Vec<Hypothesis> = serde_json::from_str(text)?;
        let all_zero = !hypotheses.is_empty() && hypotheses.iter().all(|h| h.weight == 0.0);
        Ok(Posterior {
            hypotheses,
            all_zero,
        })
    }
}

impl Scorer {
    fn score(&self, e: &Program, demos: &[DemoView]) -> Hypothesis {
        Hypothesis {
            program: e.clone(),
            log_prior: -self.params.alpha * e.size() as f64,
            log_likelihoods: demos
                .iter()
                .map(|d| self.log_demo_likelihood(e, d))
                .collect(),
            weight: 0.0,
        }
    }

    pub fn posterior(&self, hypotheses: &[Program], demos: &[DemoView]) -> Posterior {
        let scored: Vec<Hypothesis> = hypotheses
            .par_iter()
            .map(|e| self.score(e, demos))
            .collect();
        Posterior::from_scored(scored)
    }
}

/// `p(e | D)` proportional to `exp(-alpha size(e)) prod_k p(tau_k | e)`.
pub fn posterior(
    hypotheses: &[Program],
    demos: &[Trajectory],
    params: &RationalityParams,
) -> Posterior {
    let views: Vec<DemoView> = demos.iter().cloned().map(DemoView::new).collect();
    Scorer::new(params.clone()).posterior(hypotheses, &views)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RirParams {
    pub iterations: usize,
    /// Hypotheses kept between iterations.
    pub pool_size: usize,
    /// Programs requested from the proposer per iteration.
    pub n_proposals: usize,
}

impl Default for RirParams {
    fn default() -> Self {
        RirParams {
            iterations: 3,
            pool_size: 10,
            n_proposals: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub proposed: Vec<Program>,
    pub diagnostics: Vec<String>,
    pub pool: Vec<Hypothesis>,
}

#[derive(Clone, Debug)]
pub struct RirOutcome {
    pub posterior: Posterior,
    pub map: Option<Program>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum RirError {
    #[error("proposer failed: {error}")]
    ProposerFailure {
        error: ProposerError,
        partial: Box<RirOutcome>,
    },
}

/// Alternate proposing and scoring. Each round the proposer sees the current pool with its
/// weights and every program scored so far; survivors and proposals are scored together and
/// the pool is cut back to `pool_size`. Proposer errors are recorded and the loop carries on
/// with the survivors; they surface only if nothing was ever scored.
pub fn rir_loop(
    demos: &[Trajectory],
    proposer: &mut dyn Proposer,
    rir: &RirParams,
    params: &RationalityParams,
) -> Result<RirOutcome, RirError> {
    let views: Vec<DemoView> = demos.iter().cloned().map(DemoView::new).collect();
    let scorer = Scorer::new(params.clone());
    let mut memo: BTreeMap<String, Hypothesis> = BTreeMap::new();
    let mut pool: Vec<Hypothesis> = Vec::new();
    let mut history = Vec::new();
    let mut last_error = None;
    let mut posterior = Posterior::default();
    for iteration in 0..rir.iterations.max(1) {
        let ctx = ProposalContext {
            initial_states: views.iter().map(|d| d.symbolic.initial().clone()).collect(),
            demos: views.iter().map(|d| d.symbolic.clone()).collect(),
            hypotheses: pool
                .iter()
                .map(|h| ScoredProgram {
                    program: h.program.clone(),
                    score: h.weight,
                })
                .collect(),
            history: memo
                .values()
                .map(|h| ScoredProgram {
                    program: h.program.clone(),
                    score: h.weight,
                })
                .collect(),
            n: rir.n_proposals,
        };
        let mut diagnostics = Vec::new();
        let proposed = match proposer.propose(&ctx) {
            Ok(p) => p,
            Err(ProposerError::GrammarExhausted { partial }) => {
                diagnostics.push("grammar exhausted".to_string());
                partial
            }
            Err(e) => {
                diagnostics.push(e.to_string());
                last_error = Some(e);
                Vec::new()
            }
        };
        diagnostics.extend(proposer.take_diagnostics());
        let mut seen = HashSet::new();
        let candidates: Vec<Program> = pool
            .iter()
            .map(|h| h.program.clone())
            .chain(proposed.iter().filter(|p| p.validate().is_ok()).cloned())
            .filter(|p| seen.insert(p.to_string()))
            .collect();
        let fresh: Vec<&Program> = candidates
            .iter()
            .filter(|p| !memo.contains_key(&p.to_string()))
            .collect();
        let scored: Vec<Hypothesis> = fresh.par_iter().map(|e| scorer.score(e, &views)).collect();
        for h in scored {
            memo.insert(h.program.to_string(), h);
        }
        let all: Vec<Hypothesis> = candidates
            .iter()
            .map(|p| memo[&p.to_string()].clone())
            .collect();
        posterior = Posterior::from_scored(all);
        for h in &posterior.hypotheses {
            // last weight a program was seen with; the proposer sees it as history
            if let Some(m) = memo.get_mut(&h.program.to_string()) {
                m.weight = h.weight;
            }
        }
        if posterior.all_zero {
            // nothing rationalizes the demos: resample from scratch
            pool.clear();
        } else {
            posterior.hypotheses.truncate(rir.pool_size);
            posterior = Posterior::from_scored(posterior.hypotheses);
            pool = posterior.hypotheses.clone();
        }
        history.push(IterationRecord {
            iteration,
            proposed,
            diagnostics,
            pool: posterior.hypotheses.clone(),
        });
    }
    let outcome = RirOutcome {
        map: posterior.map().cloned(),
        posterior,
        history,
    };
    match last_error {
        Some(error) if memo.is_empty() => Err(RirError::ProposerFailure {
            error,
            partial: Box::new(outcome),
        }),
        _ => Ok(outcome),
    }
}
