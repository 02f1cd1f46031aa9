#![allow(dead_code)]

use elars_core::chase::{chase, chase_with_limit, ChaseError, ChaseOutcome};
use elars_core::fuzz::{random_program, random_query, random_stream, FuzzConfig};
use elars_core::lars::{Bcq, Program, Stream};
use elars_core::rewrite::{eliminate_diamond, rewrite_program, rewrite_stream, rewrite_timeline, ExRule, ExRuleSet, FactSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub program: Program,
    pub stream: Stream,
    pub query: Bcq,
}

pub fn instance(seed: u64, cfg: &FuzzConfig) -> Instance {
    let mut r = rng(seed);
    Instance {
        program: random_program(&mut r, cfg),
        stream: random_stream(&mut r, cfg),
        query: random_query(&mut r, cfg),
    }
}

pub fn existential(cfg: FuzzConfig) -> FuzzConfig {
    FuzzConfig {
        existentials: true,
        ..cfg
    }
}

/// `rew(P)` and `rew(D) ∪ rew(T)`.
pub fn rewritten(p: &Program, d: &Stream) -> (ExRuleSet, FactSet) {
    let rules = rewrite_program(&eliminate_diamond(&p.clone().with_stream_signature(d))).rules;
    let mut f = rewrite_stream(d);
    f.extend(rewrite_timeline(d.timeline));
    (rules, f)
}

pub fn chase_rewritten(p: &Program, d: &Stream, fuel: u64) -> ChaseOutcome {
    let (rules, f) = rewritten(p, d);
    chase(&rules, &f, fuel).unwrap()
}

/// Round budget for chases of arbitrary fuzzed programs.
pub const SMALL_FUEL: u64 = 12;

/// Some fuzzed programs grow exponentially per round; their chases are cut
/// off here and the instance is skipped.
pub const FACT_LIMIT: usize = 50_000;

/// A chase with [`SMALL_FUEL`], or `None` once it passes [`FACT_LIMIT`].
pub fn bounded(rules: &[ExRule], facts: &FactSet) -> Option<ChaseOutcome> {
    match chase_with_limit(rules, facts, SMALL_FUEL, FACT_LIMIT) {
        Ok(o) => Some(o),
        Err(ChaseError::FactLimit { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}
