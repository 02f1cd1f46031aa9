//! Semi-oblivious (skolem) chase with breadth-first rounds.
//!
//! A null is named by the rule that introduces it, the existential variable
//! and the binding of the rule's frontier, so applying a rule twice under the
//! same frontier binding reuses the null. Arithmetic atoms in rule bodies are
//! ordinary `leq`/`plusEq` atoms matched against the facts.

mod engine;
mod query;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

pub use engine::RoundStats;
pub use query::{answer_bcq_on_facts, for_each_homomorphism, has_homomorphism, homomorphisms, FactIndex};

use crate::lars::{NormalAtom, TMatch};
use crate::rewrite::{ExAtom, ExRule, FactSet};
use crate::term::{Name, Null, NullKey, Term};
use engine::{Engine, Finish};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ChaseError {
    #[error("fuel must be positive")]
    ZeroFuel,
    #[error("rule {0} has a head variable that is neither existential nor bound by its body")]
    UnsafeRule(Name),
    #[error("more than {limit} facts after {rounds} rounds")]
    FactLimit { limit: usize, rounds: u64 },
}

#[derive(Clone, Debug)]
pub enum ChaseOutcome {
    Saturated { facts: FactSet, steps: u64, nulls_created: usize },
    FuelExhausted { facts: FactSet, fuel: u64, nulls_created: usize },
}

impl ChaseOutcome {
    pub fn facts(&self) -> &FactSet {
        match self {
            ChaseOutcome::Saturated { facts, .. } | ChaseOutcome::FuelExhausted { facts, .. } => facts,
        }
    }

    pub fn into_facts(self) -> FactSet {
        match self {
            ChaseOutcome::Saturated { facts, .. } | ChaseOutcome::FuelExhausted { facts, .. } => facts,
        }
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self, ChaseOutcome::Saturated { .. })
    }

    pub fn rounds(&self) -> u64 {
        match self {
            ChaseOutcome::Saturated { steps, .. } => *steps,
            ChaseOutcome::FuelExhausted { fuel, .. } => *fuel,
        }
    }

    pub fn nulls_created(&self) -> usize {
        match self {
            ChaseOutcome::Saturated { nulls_created, .. } | ChaseOutcome::FuelExhausted { nulls_created, .. } => {
                *nulls_created
            }
        }
    }
}

/// One NDJSON trace record.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRecord {
    pub round: u64,
    pub new_facts: usize,
    pub new_nulls: usize,
}

impl From<RoundStats> for TraceRecord {
    fn from(s: RoundStats) -> Self {
        TraceRecord {
            round: s.round,
            new_facts: s.new_facts,
            new_nulls: s.new_nulls,
        }
    }
}

fn check_rules(rules: &[ExRule]) -> Result<(), ChaseError> {
    for r in rules {
        let body = r.body_vars();
        if r.frontier().iter().any(|v| !body.contains(v)) {
            return Err(ChaseError::UnsafeRule(r.id.clone()));
        }
    }
    Ok(())
}

/// Chases `f0` with `rules` for at most `fuel` rounds.
pub fn chase(rules: &[ExRule], f0: &FactSet, fuel: u64) -> Result<ChaseOutcome, ChaseError> {
    chase_with_trace(rules, f0, fuel, &mut |_| {})
}

/// Like [`chase`], but gives up with [`ChaseError::FactLimit`] as soon as
/// more than `max_facts` facts exist.
pub fn chase_with_limit(rules: &[ExRule], f0: &FactSet, fuel: u64, max_facts: usize) -> Result<ChaseOutcome, ChaseError> {
    let (finish, rounds, engine) = run_engine(rules, f0.iter(), fuel, Some(max_facts), &mut |_| {})?;
    Ok(outcome(finish, rounds, fuel, &engine))
}

pub fn chase_with_trace(
    rules: &[ExRule],
    f0: &FactSet,
    fuel: u64,
    trace: &mut dyn FnMut(RoundStats),
) -> Result<ChaseOutcome, ChaseError> {
    let (finish, rounds, engine) = run_engine(rules, f0.iter(), fuel, None, trace)?;
    Ok(outcome(finish, rounds, fuel, &engine))
}

fn outcome(finish: Finish, rounds: u64, fuel: u64, engine: &Engine) -> ChaseOutcome {
    let facts: FactSet = engine.facts().collect();
    let nulls_created = engine.nulls_created;
    match finish {
        Finish::Saturated => ChaseOutcome::Saturated {
            facts,
            steps: rounds,
            nulls_created,
        },
        Finish::Exhausted | Finish::Limit => ChaseOutcome::FuelExhausted {
            facts,
            fuel,
            nulls_created,
        },
    }
}

fn run_engine<'a>(
    rules: &[ExRule],
    f0: impl IntoIterator<Item = &'a NormalAtom>,
    fuel: u64,
    max_facts: Option<usize>,
    trace: &mut dyn FnMut(RoundStats),
) -> Result<(Finish, u64, Engine), ChaseError> {
    if fuel == 0 {
        return Err(ChaseError::ZeroFuel);
    }
    check_rules(rules)?;
    let mut engine = Engine::new();
    for r in rules {
        engine.add_rule(r);
    }
    for f in f0 {
        engine.add_fact(f);
    }
    let (finish, rounds) = engine.run(fuel, max_facts, trace);
    if let (Finish::Limit, Some(limit)) = (&finish, max_facts) {
        return Err(ChaseError::FactLimit { limit, rounds });
    }
    Ok((finish, rounds, engine))
}

/// A chase result that keeps only the facts whose predicate passes a filter;
/// avoids converting auxiliary facts nobody reads.
pub struct ChaseSummary {
    pub saturated: bool,
    pub rounds: u64,
    pub facts_total: usize,
    pub nulls_created: usize,
    pub facts: FactSet,
}

pub fn chase_projected(
    rules: &[ExRule],
    f0: &FactSet,
    fuel: u64,
    keep: impl Fn(&str) -> bool,
) -> Result<ChaseSummary, ChaseError> {
    let (finish, rounds, engine) = run_engine(rules, f0.iter(), fuel, None, &mut |_| {})?;
    Ok(ChaseSummary {
        saturated: matches!(finish, Finish::Saturated),
        rounds,
        facts_total: engine.fact_count(),
        nulls_created: engine.nulls_created,
        facts: engine.facts_matching(keep).collect(),
    })
}

/// The named null for existential `var` of `rule` under `binding`.
pub fn null_for(rule: &ExRule, var: &str, binding: &TMatch) -> Null {
    let mut frontier: Vec<(Name, Term)> = rule
        .frontier()
        .into_iter()
        .map(|v| {
            let t = binding.get(&v).cloned().unwrap_or(Term::Var(v.clone()));
            (v.name.clone(), t)
        })
        .collect();
    frontier.extend(rule.pinned.iter().cloned());
    frontier.sort_by(|a, b| a.0.cmp(&b.0));
    Null::new(NullKey {
        rule: rule.origin.clone(),
        var: var.into(),
        frontier,
    })
}

/// The head of `rule` under `binding` extended by the named nulls.
pub fn instantiate_head(rule: &ExRule, binding: &TMatch) -> Vec<NormalAtom> {
    let mut full = binding.clone();
    for z in &rule.existentials {
        full.insert(z.clone(), Term::Null(null_for(rule, &z.name, binding)));
    }
    rule.head
        .iter()
        .map(|h| match ExAtom::Normal(h.clone()).substitute(&full) {
            ExAtom::Normal(a) => a,
            ExAtom::Arith(_) => unreachable!(),
        })
        .collect()
}

/// Body matches of `rule` in `facts` whose instantiated head is not yet
/// contained in `facts`.
pub fn active_matches(rule: &ExRule, facts: &FactSet) -> BTreeSet<TMatch> {
    let index = FactIndex::new(facts);
    let body: Vec<NormalAtom> = rule.body.iter().map(ExAtom::to_normal).collect();
    homomorphisms(&body, &index)
        .into_iter()
        .filter(|m| instantiate_head(rule, m).iter().any(|h| !index.contains(h)))
        .collect()
}
