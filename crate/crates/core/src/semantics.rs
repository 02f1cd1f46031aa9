//! Reference semantics of LARS⁺ on streams.
//!
//! Windows `⊞ⁿ` quantify over the effective range `[max(0, t-n), t]`; this is
//! the reading under which the rewriting into existential rules is exact.
//! Everything here works directly on [`Stream`]s, without rewriting, and is
//! used as the oracle for the rewrite-and-chase pipeline.

use std::collections::BTreeSet;
use std::ops::{ControlFlow, RangeInclusive};

use thiserror::Error;

use crate::lars::{ArithAtom, BaseAtom, Bcq, LarsAtom, NormalAtom, Program, Rule, Stream, TMatch, Timeline};
use crate::term::{Sort, Term, TimePoint, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("time point {t} is outside the timeline {timeline}")]
    OutsideTimeline { t: TimePoint, timeline: Timeline },
}

/// Effective window range at `t` for size `n`.
pub fn window_range(n: u32, t: TimePoint) -> RangeInclusive<TimePoint> {
    t.saturating_sub(n)..=t
}

/// `w_n(S, t)`: the substream on `[0, t]` keeping facts in `[max(0,t-n), t]`.
pub fn make_window(s: &Stream, n: u32, t: TimePoint) -> Result<Stream, SemanticsError> {
    if !s.timeline.contains(t) {
        return Err(SemanticsError::OutsideTimeline { t, timeline: s.timeline });
    }
    let mut w = Stream::new(Timeline::new(t));
    for t2 in window_range(n, t) {
        for a in s.eval(t2) {
            w.insert(t2, a.clone());
        }
    }
    Ok(w)
}

fn base_holds(s: &Stream, t: TimePoint, b: &BaseAtom) -> bool {
    match b {
        BaseAtom::Top => s.timeline.contains(t),
        BaseAtom::Atom(a) => s.contains(t, a),
    }
}

fn time_of(t: &Term) -> Option<TimePoint> {
    t.as_time()
}

/// Satisfaction of a ground LARS⁺ atom at `t`. Non-ground atoms never hold.
pub fn holds(s: &Stream, t: TimePoint, atom: &LarsAtom) -> bool {
    match atom {
        LarsAtom::Arith(a) => a.eval().unwrap_or(false),
        LarsAtom::Plain(b) => base_holds(s, t, b),
        LarsAtom::At(t2, b) => time_of(t2).is_some_and(|t2| base_holds(s, t2, b)),
        LarsAtom::WinAt(n, t2, b) => {
            time_of(t2).is_some_and(|t2| window_range(*n, t).contains(&t2) && base_holds(s, t2, b))
        }
        LarsAtom::WinDiamond(n, b) => window_range(*n, t).any(|t2| base_holds(s, t2, b)),
        LarsAtom::WinBox(n, b) => window_range(*n, t).all(|t2| base_holds(s, t2, b)),
    }
}

fn apply(atom: &LarsAtom, binding: &TMatch) -> LarsAtom {
    let mut a = atom.clone();
    a.map_terms(|t| {
        if let Term::Var(v) = t {
            if let Some(g) = binding.get(v) {
                *t = g.clone();
            }
        }
    });
    a
}

fn resolve(t: &Term, binding: &TMatch) -> Term {
    match t {
        Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.clone(),
    }
}

struct Matcher<'a> {
    stream: &'a Stream,
    now: TimePoint,
    universe: &'a BTreeSet<Term>,
}

impl Matcher<'_> {
    /// Unifies the base atom's arguments against a fact.
    fn unify(&self, pattern: &NormalAtom, fact: &NormalAtom, binding: &mut TMatch) -> bool {
        if pattern.pred != fact.pred || pattern.arity() != fact.arity() {
            return false;
        }
        let mut bound: Vec<Var> = Vec::new();
        for (p, f) in pattern.args.iter().zip(&fact.args) {
            let ok = match p {
                Term::Var(v) => match binding.get(v) {
                    Some(g) => g == f,
                    None => {
                        let admissible = match v.sort {
                            Sort::Abstract => f.sort() == Sort::Abstract && self.universe.contains(f),
                            Sort::Time => matches!(f, Term::Time(x) if self.stream.timeline.contains(*x)),
                        };
                        if admissible {
                            binding.insert(v.clone(), f.clone());
                            bound.push(v.clone());
                        }
                        admissible
                    }
                },
                g => g == f,
            };
            if !ok {
                for v in bound {
                    binding.remove(&v);
                }
                return false;
            }
        }
        true
    }

    /// Candidate time points for the time term `tt` of an `@` atom.
    fn time_candidates(&self, tt: &Term, binding: &TMatch, range: RangeInclusive<TimePoint>) -> Vec<(TimePoint, Option<Var>)> {
        match resolve(tt, binding) {
            Term::Time(x) => {
                if range.contains(&x) {
                    vec![(x, None)]
                } else {
                    vec![]
                }
            }
            Term::Var(v) => range
                .filter(|x| self.stream.timeline.contains(*x))
                .map(|x| (x, Some(v.clone())))
                .collect(),
            _ => vec![],
        }
    }

    /// All extensions of `binding` that make `atom` true.
    fn extensions(&self, atom: &LarsAtom, binding: &TMatch) -> Vec<TMatch> {
        let full = self.stream.timeline.points();
        let now = self.now;
        let mut out: BTreeSet<TMatch> = BTreeSet::new();
        match atom {
            LarsAtom::Arith(a) => self.arith_extensions(a, binding, &mut out),
            LarsAtom::Plain(b) => self.base_extensions(b, now, binding, &mut out),
            LarsAtom::WinDiamond(n, b) => {
                for t2 in window_range(*n, now) {
                    self.base_extensions(b, t2, binding, &mut out);
                }
            }
            LarsAtom::WinBox(n, b) => {
                let mut cands = BTreeSet::new();
                self.base_extensions(b, now, binding, &mut cands);
                for c in cands {
                    let ground = match apply(&LarsAtom::Plain(b.clone()), &c) {
                        LarsAtom::Plain(g) => g,
                        _ => unreachable!(),
                    };
                    if window_range(*n, now).all(|t2| base_holds(self.stream, t2, &ground)) {
                        out.insert(c);
                    }
                }
            }
            LarsAtom::At(tt, b) => {
                for (t2, var) in self.time_candidates(tt, binding, full) {
                    let mut bnd = binding.clone();
                    if let Some(v) = var {
                        bnd.insert(v, Term::Time(t2));
                    }
                    self.base_extensions(b, t2, &bnd, &mut out);
                }
            }
            LarsAtom::WinAt(n, tt, b) => {
                for (t2, var) in self.time_candidates(tt, binding, window_range(*n, now)) {
                    let mut bnd = binding.clone();
                    if let Some(v) = var {
                        bnd.insert(v, Term::Time(t2));
                    }
                    self.base_extensions(b, t2, &bnd, &mut out);
                }
            }
        }
        out.into_iter().collect()
    }

    fn base_extensions(&self, b: &BaseAtom, t: TimePoint, binding: &TMatch, out: &mut BTreeSet<TMatch>) {
        match b {
            BaseAtom::Top => {
                if self.stream.timeline.contains(t) {
                    out.insert(binding.clone());
                }
            }
            BaseAtom::Atom(pattern) => {
                for fact in self.stream.eval(t) {
                    let mut bnd = binding.clone();
                    if self.unify(pattern, fact, &mut bnd) {
                        out.insert(bnd);
                    }
                }
            }
        }
    }

    fn arith_extensions(&self, a: &ArithAtom, binding: &TMatch, out: &mut BTreeSet<TMatch>) {
        let resolved: Vec<Term> = a.terms().into_iter().map(|t| resolve(t, binding)).collect();
        let unbound: Vec<Var> = {
            let mut vs: Vec<Var> = Vec::new();
            for t in &resolved {
                if let Term::Var(v) = t {
                    if !vs.contains(v) {
                        vs.push(v.clone());
                    }
                }
            }
            vs
        };
        let timeline = self.stream.timeline;
        // Enumerate the unbound variables over the timeline.
        let mut assignment = vec![0u32; unbound.len()];
        loop {
            let mut bnd = binding.clone();
            for (v, x) in unbound.iter().zip(&assignment) {
                bnd.insert(v.clone(), Term::Time(*x));
            }
            let ground = match apply(&LarsAtom::Arith(a.clone()), &bnd) {
                LarsAtom::Arith(g) => g,
                _ => unreachable!(),
            };
            if ground.eval() == Some(true) {
                out.insert(bnd);
            }
            // odometer increment
            let mut i = 0;
            loop {
                if i == assignment.len() {
                    return;
                }
                if assignment[i] < timeline.horizon {
                    assignment[i] += 1;
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }

    fn search<F>(&self, remaining: &mut Vec<&LarsAtom>, binding: &TMatch, on_match: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&TMatch) -> ControlFlow<()>,
    {
        if remaining.is_empty() {
            return on_match(binding);
        }
        // Most constrained atom first. Arithmetic atoms with several unbound
        // variables are only estimated, since enumerating them is expensive.
        let width = u64::from(self.stream.timeline.len());
        let mut best: Option<(usize, u64, Option<Vec<TMatch>>)> = None;
        for (i, a) in remaining.iter().enumerate() {
            let unbound = match a {
                LarsAtom::Arith(ar) => ar
                    .terms()
                    .into_iter()
                    .filter_map(Term::as_var)
                    .filter(|v| !binding.contains_key(*v))
                    .collect::<BTreeSet<_>>()
                    .len(),
                _ => 0,
            };
            let (cost, exts) = if unbound >= 2 {
                (width.saturating_pow(unbound as u32), None)
            } else {
                let e = self.extensions(a, binding);
                (e.len() as u64, Some(e))
            };
            if best.as_ref().is_none_or(|(_, c, _)| cost < *c) {
                best = Some((i, cost, exts));
            }
            if cost == 0 {
                break;
            }
        }
        let (idx, _, exts) = best.expect("non-empty");
        let exts = exts.unwrap_or_else(|| self.extensions(remaining[idx], binding));
        if exts.is_empty() {
            return ControlFlow::Continue(());
        }
        let atom = remaining.remove(idx);
        for e in &exts {
            if self.search(remaining, e, on_match).is_break() {
                remaining.insert(idx, atom);
                return ControlFlow::Break(());
            }
        }
        remaining.insert(idx, atom);
        ControlFlow::Continue(())
    }
}

pub(crate) fn for_each_match<F>(s: &Stream, t: TimePoint, atoms: &[LarsAtom], universe: &BTreeSet<Term>, seed: &TMatch, mut f: F)
where
    F: FnMut(&TMatch) -> ControlFlow<()>,
{
    let m = Matcher {
        stream: s,
        now: t,
        universe,
    };
    let mut remaining: Vec<&LarsAtom> = atoms.iter().collect();
    let _ = m.search(&mut remaining, seed, &mut f);
}

/// All T-matches of `atoms` on `s` at `t`, with abstract variables ranging
/// over `universe` and time variables over the timeline.
pub fn find_matches(s: &Stream, t: TimePoint, atoms: &[LarsAtom], universe: &BTreeSet<Term>) -> BTreeSet<TMatch> {
    let mut out = BTreeSet::new();
    for_each_match(s, t, atoms, universe, &TMatch::new(), |m| {
        out.insert(m.clone());
        ControlFlow::Continue(())
    });
    out
}

fn has_match(s: &Stream, t: TimePoint, atoms: &[LarsAtom], universe: &BTreeSet<Term>, seed: &TMatch) -> bool {
    let mut found = false;
    for_each_match(s, t, atoms, universe, seed, |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

/// Whether `r` is satisfied by `s`, witnesses for existential variables
/// being drawn from the abstract terms of `s`.
pub fn satisfies_rule(s: &Stream, r: &Rule) -> bool {
    if r.head_time_points().any(|t| !s.timeline.contains(t)) {
        return true;
    }
    let universe = s.abstract_terms();
    let head: Vec<LarsAtom> = r.head.iter().map(|h| h.to_lars()).collect();
    s.timeline.points().all(|t| {
        let mut ok = true;
        for_each_match(s, t, &r.body, &universe, &TMatch::new(), |m| {
            if has_match(s, t, &head, &universe, m) {
                ControlFlow::Continue(())
            } else {
                ok = false;
                ControlFlow::Break(())
            }
        });
        ok
    })
}

/// `s` is a model of `p` and of the data stream `d`.
pub fn is_model(s: &Stream, p: &Program, d: &Stream) -> bool {
    d.timeline.horizon <= s.timeline.horizon && d.is_subset_of(s) && p.rules.iter().all(|r| satisfies_rule(s, r))
}

/// `S, t ⊨ q`.
pub fn bcq_holds(s: &Stream, t: TimePoint, q: &Bcq) -> bool {
    let universe = s.abstract_terms();
    has_match(s, t, &q.atoms, &universe, &TMatch::new())
}
