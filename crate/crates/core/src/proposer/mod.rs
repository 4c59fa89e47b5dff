//! Hypothesis sources for the inference loop: size-ordered grammar enumeration, and a client
//! for a remote multimodal chat model.

mod enumerate;
mod remote;

pub use enumerate::{canonical_pred, places_of_size, Grammar, COUNT_THRESHOLDS};
pub use remote::{
    fenced_blocks, frame_urls, parse_response, HttpTransport, RemoteConfig, RemoteProposer,
    ReplayTransport, Transport,
};

use crate::dsl::{eval, satisfies_states, Program};
use crate::inverse::SymbolicTrajectory;
use crate::world::SymbolicState;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredProgram {
    pub program: Program,
    /// Posterior weight in `[0, 1]`.
    pub score: f64,
}

/// What a proposer may look at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalContext {
    pub initial_states: Vec<SymbolicState>,
    pub demos: Vec<SymbolicTrajectory>,
    /// The current pool with its weights.
    pub hypotheses: Vec<ScoredProgram>,
    /// Everything scored in earlier rounds.
    pub history: Vec<ScoredProgram>,
    /// Programs requested.
    pub n: usize,
}

impl ProposalContext {
    pub fn known(&self) -> HashSet<String> {
        self.hypotheses
            .iter()
            .chain(&self.history)
            .map(|h| h.program.to_string())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error, Serialize, Deserialize)]
pub enum ProposerError {
    #[error("grammar exhausted after {} programs", partial.len())]
    GrammarExhausted { partial: Vec<Program> },
    #[error("transport: {0}")]
    Transport(String),
    #[error("credential variable {0} is not set")]
    AuthMissing(String),
    #[error("no parseable program in the response ({} malformed blocks)", .0.len())]
    ParseFailure(Vec<String>),
}

pub trait Proposer: Send {
    fn propose(&mut self, ctx: &ProposalContext) -> Result<Vec<Program>, ProposerError>;

    /// Notes about the last call, such as dropped blocks.
    fn take_diagnostics(&mut self) -> Vec<String> {
        Vec::new()
    }
}

/// Always offers the same programs, minus those already known.
#[derive(Clone, Debug)]
pub struct FixedProposer(pub Vec<Program>);

impl Proposer for FixedProposer {
    fn propose(&mut self, ctx: &ProposalContext) -> Result<Vec<Program>, ProposerError> {
        let known = ctx.known();
        Ok(self
            .0
            .iter()
            .filter(|p| !known.contains(&p.to_string()))
            .cloned()
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    /// Shuffles programs within each size level.
    pub seed: Option<u64>,
    /// Largest program size generated.
    pub size_cap: usize,
    /// Drop programs the demonstrations do not satisfy.
    pub require_consistent: bool,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            seed: None,
            size_cap: 7,
            require_consistent: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ProposerConfig {
    Enumerative(EnumConfig),
    Remote(RemoteConfig),
}

/// Whether every demonstration passes through the program's subgoals, and at least one does
/// not start out satisfying them.
pub fn consistent(e: &Program, demos: &[SymbolicTrajectory]) -> bool {
    let mut informative = false;
    for d in demos {
        let Ok(g) = eval(e, d.initial()) else {
            return false;
        };
        if !satisfies_states(&g, d.states.iter()) {
            return false;
        }
        if !satisfies_states(&g, std::iter::once(d.initial())) {
            informative = true;
        }
    }
    informative || demos.is_empty()
}

/// Programs in nondecreasing size, filtered by the demonstrations.
pub struct EnumerativeProposer {
    pub cfg: EnumConfig,
    grammar: Grammar,
}

impl EnumerativeProposer {
    pub fn new(cfg: EnumConfig) -> EnumerativeProposer {
        EnumerativeProposer {
            cfg,
            grammar: Grammar::new(),
        }
    }

    fn level(&mut self, s: usize) -> Vec<Program> {
        let mut v = self.grammar.programs(s).to_vec();
        if let Some(seed) = self.cfg.seed {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            v.shuffle(&mut rng);
        }
        v
    }
}

impl Proposer for EnumerativeProposer {
    fn propose(&mut self, ctx: &ProposalContext) -> Result<Vec<Program>, ProposerError> {
        let known = ctx.known();
        let mut out = Vec::new();
        for s in 1..=self.cfg.size_cap {
            for p in self.level(s) {
                if known.contains(&p.to_string()) {
                    continue;
                }
                if !ctx.initial_states.iter().all(|s0| eval(&p, s0).is_ok()) {
                    continue;
                }
                if self.cfg.require_consistent && !consistent(&p, &ctx.demos) {
                    continue;
                }
                out.push(p);
                if out.len() >= ctx.n {
                    return Ok(out);
                }
            }
        }
        Err(ProposerError::GrammarExhausted { partial: out })
    }
}

#[cfg(test)]
mod tests;
