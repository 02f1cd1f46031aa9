//! Least models of existential-free programs, computed directly on streams.

use std::ops::ControlFlow;

use super::ReasonError;
use crate::lars::{BaseAtom, Bcq, HeadAtom, NormalAtom, Program, Stream, TMatch};
use crate::semantics::{bcq_holds, for_each_match};
use crate::term::{Term, TimePoint};

fn ground(a: &NormalAtom, m: &TMatch) -> NormalAtom {
    NormalAtom::new(
        a.pred.clone(),
        a.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => m[v].clone(),
                other => other.clone(),
            })
            .collect(),
    )
}

/// The least model of `p` containing `d`, by iterating immediate
/// consequences at every time point until nothing changes.
pub fn least_model(p: &Program, d: &Stream) -> Result<Stream, ReasonError> {
    if let Some(r) = p.rules.iter().find(|r| r.is_existential()) {
        return Err(ReasonError::ExistentialRule(r.id.clone()));
    }
    let timeline = d.timeline;
    // Rules whose head names a time point off the timeline hold vacuously.
    let rules: Vec<_> = p
        .rules
        .iter()
        .filter(|r| r.head_time_points().all(|t| timeline.contains(t)))
        .collect();
    let mut s = d.clone();
    loop {
        let universe = s.abstract_terms();
        let mut new: Vec<(TimePoint, NormalAtom)> = Vec::new();
        for r in &rules {
            for t in timeline.points() {
                for_each_match(&s, t, &r.body, &universe, &TMatch::new(), |m| {
                    for h in &r.head {
                        let BaseAtom::Atom(a) = h.base() else { continue };
                        let at = match h {
                            HeadAtom::Plain(_) => t,
                            HeadAtom::At(tt, _) => match tt {
                                Term::Var(v) => m[v].as_time().expect("time variables bind time points"),
                                other => other.as_time().expect("head time terms are time points"),
                            },
                        };
                        let g = ground(a, m);
                        if timeline.contains(at) && !s.contains(at, &g) {
                            new.push((at, g));
                        }
                    }
                    ControlFlow::Continue(())
                });
            }
        }
        if new.is_empty() {
            return Ok(s);
        }
        for (t, a) in new {
            s.insert(t, a);
        }
    }
}

/// `P, D, t ⊨ q` for existential-free `P`, on the least model.
pub fn oracle_answer(p: &Program, d: &Stream, t: TimePoint, q: &Bcq) -> Result<bool, ReasonError> {
    if !d.timeline.contains(t) {
        return Err(ReasonError::OutsideTimeline { t, timeline: d.timeline });
    }
    Ok(bcq_holds(&least_model(p, d)?, t, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::is_model;
    use crate::syntax::{parse_program, parse_query, parse_stream};

    fn belt_stream() -> Stream {
        let mut text = String::from("timeline 0 9.\n");
        for t in 0..10 {
            text.push_str(&format!("@{t} high(8).\n@{t} high(9).\n"));
        }
        for (t, v) in [(0, 7), (1, 8), (2, 8), (3, 8), (4, 8), (5, 9)] {
            text.push_str(&format!("@{t} bTmp(b1, {v}).\n"));
        }
        parse_stream(&text).unwrap()
    }

    #[test]
    fn warning_window() {
        let p = parse_program("in 3 always bTmp(X,Y), high(Y) -> warn(X).").unwrap();
        let d = belt_stream();
        let m = least_model(&p, &d).unwrap();
        assert!(is_model(&m, &p, &d));
        let q = parse_query("warn(b1)").unwrap();
        let at: Vec<u32> = (0..10).filter(|t| bcq_holds(&m, *t, &q)).collect();
        assert_eq!(at, vec![4]);
        assert!(oracle_answer(&p, &d, 4, &q).unwrap());
        assert!(!oracle_answer(&p, &d, 5, &q).unwrap());
    }

    #[test]
    fn empty_program_reads_data() {
        let d = parse_stream("timeline 0 2. @1 p(a).").unwrap();
        let q = parse_query("p(a)").unwrap();
        assert!(oracle_answer(&Program::default(), &d, 1, &q).unwrap());
        assert!(!oracle_answer(&Program::default(), &d, 0, &q).unwrap());
    }

    #[test]
    fn rejects_existentials_and_bad_times() {
        let p = parse_program("belt(X) -> exists Y. bOpr(X,Y).").unwrap();
        let d = parse_stream("timeline 0 2.").unwrap();
        let q = parse_query("top").unwrap();
        assert!(matches!(oracle_answer(&p, &d, 0, &q), Err(ReasonError::ExistentialRule(_))));
        assert!(matches!(
            oracle_answer(&Program::default(), &d, 3, &q),
            Err(ReasonError::OutsideTimeline { .. })
        ));
    }

    #[test]
    fn temporal_propagation() {
        let p = parse_program("@T q(X), U = T + 1 -> @U q(X).\nq(X) -> @7 r(X).").unwrap();
        let d = parse_stream("timeline 0 3. @1 q(a).").unwrap();
        let m = least_model(&p, &d).unwrap();
        assert!(m.contains(3, &NormalAtom::new("q", vec![Term::constant("a")])));
        assert!(!m.contains(0, &NormalAtom::new("q", vec![Term::constant("a")])));
        assert_eq!(m.len(), 3);
    }
}
