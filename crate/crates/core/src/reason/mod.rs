//! End-to-end query answering: gate check, rewriting, chase, query match.

mod belts;
mod oracle;
mod pointwise;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use belts::{belt_name, belt_program, gen_belts, BeltConfig, BeltInstance, Episode, BELT_PROGRAM};
pub use oracle::{least_model, oracle_answer};
pub use pointwise::{batches_of, run_pointwise, Batch, PointwiseRunner, TickReport};

use crate::acyclicity::{is_lwa, is_tlwa};
use crate::chase::{answer_bcq_on_facts, chase_projected, ChaseError};
use crate::lars::{Bcq, NormalAtom, Program, Stream, Timeline, TOP};
use crate::rewrite::{
    clip_query, clip_windows, eliminate_diamond, rewrite_program_with_window, rewrite_query, rewrite_stream,
    rewrite_timeline, FactSet, BOX_PREFIX,
};
use crate::term::{Name, Term, TimePoint};

pub const DEFAULT_FUEL: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReasonError {
    #[error("time point {t} is outside the timeline {timeline}")]
    OutsideTimeline { t: TimePoint, timeline: Timeline },
    #[error("the program is neither LWA nor TLWA over {0}; pass an explicit fuel to run it anyway")]
    NoGate(Timeline),
    #[error("rule {0} has existential variables")]
    ExistentialRule(Name),
    #[error("batch at time {got} arrived after time {last}")]
    OutOfOrder { got: TimePoint, last: TimePoint },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    #[serde(rename = "unknown-fuel-exhausted")]
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Chase,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Lwa,
    Tlwa,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub rounds: u64,
    pub facts: usize,
    pub nulls: usize,
    pub saturated: bool,
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Answer {
    pub verdict: Verdict,
    pub mode: Mode,
    pub gate: Gate,
    pub stats: Stats,
}

#[derive(Clone, Copy, Debug)]
pub struct AnswerOptions {
    /// Explicit round budget; also lifts the gate requirement.
    pub fuel: Option<u64>,
    pub require_gate: bool,
}

impl Default for AnswerOptions {
    fn default() -> Self {
        AnswerOptions {
            fuel: None,
            require_gate: true,
        }
    }
}

/// The termination guarantee that applies to `p` over `timeline`.
pub fn gate(p: &Program, timeline: Timeline) -> Gate {
    if is_lwa(p).acyclic {
        Gate::Lwa
    } else if is_tlwa(p, timeline).acyclic {
        Gate::Tlwa
    } else {
        Gate::None
    }
}

fn prepare(p: &Program, d: &Stream) -> Program {
    let mut p = clip_windows(&p.clone().with_stream_signature(d), d.timeline);
    p.rules.retain(|r| r.head_time_points().all(|t| d.timeline.contains(t)));
    p
}

fn check_gate(p: &Program, d: &Stream, opts: &AnswerOptions) -> Result<(Gate, u64), ReasonError> {
    let g = gate(p, d.timeline);
    if opts.require_gate && g == Gate::None && opts.fuel.is_none() {
        return Err(ReasonError::NoGate(d.timeline));
    }
    Ok((g, opts.fuel.unwrap_or(DEFAULT_FUEL)))
}

/// `P, D, t ⊨ q` through the rewriting and the chase.
pub fn answer(p: &Program, d: &Stream, t: TimePoint, q: &Bcq, opts: AnswerOptions) -> Result<Answer, ReasonError> {
    let start = Instant::now();
    if !d.timeline.contains(t) {
        return Err(ReasonError::OutsideTimeline { t, timeline: d.timeline });
    }
    let p = prepare(p, d);
    let q = clip_query(q, d.timeline);
    let (gate, fuel) = check_gate(&p, d, &opts)?;
    let rew = rewrite_program_with_window(&eliminate_diamond(&p), q.max_window());
    let rq = rewrite_query(&q, t);
    let mut f0 = rewrite_stream(d);
    f0.extend(rewrite_timeline(d.timeline));
    let keep: BTreeSet<&str> = rq.atoms.iter().map(|a| a.pred()).collect();
    let summary = chase_projected(&rew.rules, &f0, fuel, |p| keep.contains(p))?;
    let entailed = answer_bcq_on_facts(&summary.facts, &rq);
    let verdict = match (entailed, summary.saturated) {
        (true, _) => Verdict::Yes,
        (false, true) => Verdict::No,
        (false, false) => Verdict::Unknown,
    };
    Ok(Answer {
        verdict,
        mode: Mode::Chase,
        gate,
        stats: Stats {
            rounds: summary.rounds,
            facts: summary.facts_total,
            nulls: summary.nulls_created,
            saturated: summary.saturated,
            ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// User-vocabulary facts per time point, read off `box_p(t⃗, 0, s)`.
#[derive(Clone, Debug)]
pub struct Materialization {
    pub facts: BTreeMap<TimePoint, BTreeSet<NormalAtom>>,
    pub gate: Gate,
    pub stats: Stats,
}

impl Materialization {
    pub fn at(&self, t: TimePoint) -> impl Iterator<Item = &NormalAtom> {
        self.facts.get(&t).into_iter().flatten()
    }
}

/// Projects a rewritten fact back to `(s, p(t⃗))`; `None` for anything but
/// `box_p(t⃗, 0, s)` with `p` a user predicate.
pub fn project(f: &NormalAtom) -> Option<(TimePoint, NormalAtom)> {
    let p = f.pred.strip_prefix(BOX_PREFIX)?;
    let k = f.arity();
    if p == TOP || k < 2 {
        return None;
    }
    match (&f.args[k - 2], &f.args[k - 1]) {
        (Term::Time(0), Term::Time(s)) => Some((*s, NormalAtom::new(p, f.args[..k - 2].to_vec()))),
        _ => None,
    }
}

/// Computes everything `p` derives from `d` at every time point.
pub fn materialize(p: &Program, d: &Stream, opts: AnswerOptions) -> Result<Materialization, ReasonError> {
    let start = Instant::now();
    let p = prepare(p, d);
    let (gate, fuel) = check_gate(&p, d, &opts)?;
    let rew = rewrite_program_with_window(&eliminate_diamond(&p), 0);
    let mut f0: FactSet = rewrite_stream(d);
    f0.extend(rewrite_timeline(d.timeline));
    let summary = chase_projected(&rew.rules, &f0, fuel, |name| {
        name.starts_with(BOX_PREFIX) && name != "box_top"
    })?;
    let mut facts: BTreeMap<TimePoint, BTreeSet<NormalAtom>> = BTreeMap::new();
    for f in &summary.facts {
        if let Some((s, a)) = project(f) {
            facts.entry(s).or_default().insert(a);
        }
    }
    Ok(Materialization {
        facts,
        gate,
        stats: Stats {
            rounds: summary.rounds,
            facts: summary.facts_total,
            nulls: summary.nulls_created,
            saturated: summary.saturated,
            ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_query, parse_stream};

    pub(crate) fn belt_example() -> (Program, Stream) {
        let p = parse_program("r1: in 3 always bTmp(X,Y), high(Y) -> warn(X).\nr2: belt(X) -> exists Y. bOpr(X,Y).")
            .unwrap();
        let mut text = String::from("timeline 0 9.\n");
        for t in 0..10 {
            let v = if t <= 4 { 90 } else { 70 };
            text.push_str(&format!("@{t} belt(b1).\n@{t} high(90).\n@{t} bTmp(b1, {v}).\n"));
        }
        (p, parse_stream(&text).unwrap())
    }

    #[test]
    fn belt_answers() {
        let (p, d) = belt_example();
        let ask = |q: &str, t| answer(&p, &d, t, &parse_query(q).unwrap(), AnswerOptions::default()).unwrap();
        let a = ask("warn(b1)", 4);
        assert_eq!(a.verdict, Verdict::Yes);
        assert_eq!(a.gate, Gate::Lwa);
        assert!(a.stats.saturated);
        assert_eq!(ask("exists Y. bOpr(b1, Y)", 4).verdict, Verdict::Yes);
        assert_eq!(ask("exists Y. bOpr(b1, Y)", 5).verdict, Verdict::Yes);
        assert_eq!(ask("warn(b1)", 5).verdict, Verdict::No);
        assert_eq!(ask("exists X. in 5 some warn(X)", 9).verdict, Verdict::Yes);
        assert_eq!(ask("exists X. in 4 some warn(X)", 9).verdict, Verdict::No);
    }

    #[test]
    fn example_two_saturates_under_tlwa() {
        let p = parse_program("@T p(X,Y), U = T + 1 -> exists V. @U p(Y,V).").unwrap();
        let d = parse_stream("timeline 0 3. @0 p(a,b).").unwrap();
        let q = parse_query("exists X,Y. p(X,Y)").unwrap();
        let a = answer(&p, &d, 0, &q, AnswerOptions::default()).unwrap();
        assert_eq!((a.verdict, a.gate), (Verdict::Yes, Gate::Tlwa));
        assert!(a.stats.saturated);
        assert_eq!(answer(&p, &d, 3, &q, AnswerOptions::default()).unwrap().verdict, Verdict::Yes);
    }

    #[test]
    fn refusal_and_override() {
        let p = parse_program("@T p(X,Y) -> exists V. @T p(Y,V).").unwrap();
        let d = parse_stream("timeline 0 1. @0 p(a,b).").unwrap();
        let q = parse_query("p(b, a)").unwrap();
        assert!(matches!(
            answer(&p, &d, 0, &q, AnswerOptions::default()),
            Err(ReasonError::NoGate(_))
        ));
        let opts = AnswerOptions {
            fuel: Some(20),
            require_gate: true,
        };
        let a = answer(&p, &d, 0, &q, opts).unwrap();
        assert_eq!((a.verdict, a.gate), (Verdict::Unknown, Gate::None));
        let q = parse_query("exists X. p(b, X)").unwrap();
        assert_eq!(answer(&p, &d, 0, &q, opts).unwrap().verdict, Verdict::Yes);
        assert!(matches!(
            answer(&p, &d, 2, &q, opts),
            Err(ReasonError::OutsideTimeline { .. })
        ));
    }

    #[test]
    fn materialization_projects_user_facts() {
        let (p, d) = belt_example();
        let m = materialize(&p, &d, AnswerOptions::default()).unwrap();
        let warn = NormalAtom::new("warn", vec![Term::constant("b1")]);
        let at: Vec<u32> = (0..10).filter(|t| m.at(*t).any(|f| *f == warn)).collect();
        assert_eq!(at, vec![0, 1, 2, 3, 4]);
        assert!(m.at(3).any(|f| &*f.pred == "bOpr"));
        assert!(m.at(3).all(|f| !f.pred.starts_with("box_") && &*f.pred != "top"));
    }
}
