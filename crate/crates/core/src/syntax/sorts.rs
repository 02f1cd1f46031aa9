use std::collections::BTreeMap;

use super::{ParseError, ParseErrorKind, SourceSpan};
use crate::lars::{HeadAtom, LarsAtom, PredicateSig, Program, Signature, Stream};
use crate::term::{Name, Sort, Term};

fn conflict(kind: ParseErrorKind, msg: String) -> ParseError {
    ParseError::new(kind, SourceSpan::default(), msg)
}

fn check_term(t: &Term, expected: Sort, vars: &mut BTreeMap<Name, Sort>, rule: &str) -> Result<(), ParseError> {
    if t.sort() != expected {
        return Err(conflict(
            ParseErrorKind::SortConflict,
            format!("rule {rule}: term {t} of sort {} in a {expected} position", t.sort()),
        ));
    }
    if let Term::Var(v) = t {
        if let Some(&s) = vars.get(&v.name) {
            if s != v.sort {
                return Err(conflict(
                    ParseErrorKind::SortConflict,
                    format!("rule {rule}: variable {} is used with both sorts", v.name),
                ));
            }
        }
        vars.insert(v.name.clone(), v.sort);
    }
    Ok(())
}

/// Checks that every position of the program and stream is used with one sort
/// and one arity, and returns the resulting signature. Every predicate of a
/// program is simple: its positions are abstract, time enters only through
/// `@`, windows and arithmetic.
pub fn infer_sorts(p: &Program, d: &Stream) -> Result<Signature, ParseError> {
    let mut sig = Signature::new();
    let mut add = |pred: &Name, arity: usize| -> Result<(), ParseError> {
        let entry = sig.entry(pred.clone()).or_insert_with(|| PredicateSig::simple(pred.clone(), arity));
        if entry.arity != arity {
            return Err(conflict(
                ParseErrorKind::ArityConflict,
                format!("predicate {pred} is used with arity {} and {arity}", entry.arity),
            ));
        }
        Ok(())
    };
    for r in &p.rules {
        let mut vars = BTreeMap::new();
        let atoms = r.body.iter().cloned().chain(r.head.iter().map(HeadAtom::to_lars));
        for a in atoms {
            let (time_terms, base): (Vec<&Term>, _) = match &a {
                LarsAtom::Arith(ar) => (ar.terms(), None),
                LarsAtom::Plain(b) | LarsAtom::WinBox(_, b) | LarsAtom::WinDiamond(_, b) => (vec![], Some(b)),
                LarsAtom::At(t, b) | LarsAtom::WinAt(_, t, b) => (vec![t], Some(b)),
            };
            for t in time_terms {
                check_term(t, Sort::Time, &mut vars, &r.id)?;
            }
            if let Some(crate::lars::BaseAtom::Atom(b)) = base {
                add(&b.pred, b.arity())?;
                for t in &b.args {
                    check_term(t, Sort::Abstract, &mut vars, &r.id)?;
                }
            }
        }
    }
    for a in d.atoms() {
        add(&a.pred, a.arity())?;
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_program, parse_stream};
    use super::*;
    use crate::lars::{BaseAtom, NormalAtom, Rule};

    #[test]
    fn temporal_rules_are_simple() {
        let p = parse_program("@T q(X,Y), U = T + 1 -> @U p(Y).\n@T p(Y) -> @T q(Y, Y).").unwrap();
        let sig = infer_sorts(&p, &Stream::new(crate::lars::Timeline::new(0))).unwrap();
        assert_eq!(sig["p"], PredicateSig::simple("p", 1));
        assert_eq!(sig["q"], PredicateSig::simple("q", 2));
        let r = &p.rules[0];
        assert!(r.body_vars().iter().any(|v| &*v.name == "T" && v.sort == Sort::Time));
        assert!(r.body_vars().iter().any(|v| &*v.name == "Y" && v.sort == Sort::Abstract));
    }

    #[test]
    fn conflicts_are_reported() {
        let p = parse_program("p(X) -> q(X).").unwrap();
        let d = parse_stream("timeline 0 1. @0 p(a, b).").unwrap();
        assert_eq!(infer_sorts(&p, &d).unwrap_err().kind, ParseErrorKind::ArityConflict);

        let bad = Program::from_rules(vec![Rule {
            id: "r".into(),
            body: vec![
                LarsAtom::Plain(BaseAtom::Atom(NormalAtom::new("p", vec![Term::avar("X")]))),
                LarsAtom::At(Term::tvar("X"), BaseAtom::Top),
            ],
            head: vec![HeadAtom::Plain(BaseAtom::Top)],
            existentials: vec![],
        }]);
        let empty = Stream::new(crate::lars::Timeline::new(0));
        assert_eq!(infer_sorts(&bad, &empty).unwrap_err().kind, ParseErrorKind::SortConflict);
    }
}
