//! Translation of LARS⁺ programs, streams, queries and timelines into
//! existential rules over a time sort.
//!
//! Every simple predicate `p` gets two auxiliary predicates:
//! `box_p(t⃗, n, c)` meaning `⊞ⁿ□ p(t⃗)` holds at `c`, and
//! `at_p(t⃗, n, t, c)` meaning `⊞ⁿ @_t p(t⃗)` holds at `c`. Arithmetic is
//! kept as `leq`/`plusEq` atoms and matched against the materialized
//! timeline facts.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::lars::{
    ArithAtom, BaseAtom, Bcq, HeadAtom, LarsAtom, NormalAtom, PredicateSig, Program, Rule, Stream, Timeline, TOP,
};
use crate::term::{Name, Sort, Term, TimePoint, Var};

pub const LEQ: &str = "leq";
pub const PLUS_EQ: &str = "plusEq";
pub const BOX_PREFIX: &str = "box_";
pub const AT_PREFIX: &str = "at_";

/// Ground facts of the existential-rule side.
pub type FactSet = HashSet<NormalAtom>;

pub type ExRuleSet = Vec<ExRule>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExAtom {
    Normal(NormalAtom),
    Arith(ArithAtom),
}

impl ExAtom {
    /// Single-sorted view: arithmetic becomes `leq`/`plusEq` atoms.
    pub fn to_normal(&self) -> NormalAtom {
        match self {
            ExAtom::Normal(a) => a.clone(),
            ExAtom::Arith(a) => a.to_normal(),
        }
    }

    pub fn pred(&self) -> &str {
        match self {
            ExAtom::Normal(a) => &a.pred,
            ExAtom::Arith(ArithAtom::Leq(..)) => LEQ,
            ExAtom::Arith(ArithAtom::PlusEq(..)) => PLUS_EQ,
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            ExAtom::Normal(a) => a.args.iter().collect(),
            ExAtom::Arith(a) => a.terms(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    pub fn substitute(&self, binding: &BTreeMap<Var, Term>) -> ExAtom {
        let sub = |t: &Term| match t {
            Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        };
        match self {
            ExAtom::Normal(a) => ExAtom::Normal(NormalAtom::new(a.pred.clone(), a.args.iter().map(sub).collect())),
            ExAtom::Arith(ArithAtom::Leq(a, b)) => ExAtom::Arith(ArithAtom::Leq(sub(a), sub(b))),
            ExAtom::Arith(ArithAtom::PlusEq(a, b, c)) => ExAtom::Arith(ArithAtom::PlusEq(sub(a), sub(b), sub(c))),
        }
    }
}

/// `body → ∃z⃗. head` over normal and arithmetic atoms.
///
/// `origin` and `pinned` determine the identity of the nulls the rule
/// creates: a null is keyed by `origin`, the existential variable, and the
/// frontier binding extended with `pinned`. Partial grounding records the
/// grounded frontier variables in `pinned`, so a ground instance mints the
/// same nulls as the rule it came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExRule {
    pub id: Name,
    pub origin: Name,
    pub pinned: Vec<(Name, Term)>,
    pub body: Vec<ExAtom>,
    pub head: Vec<NormalAtom>,
    pub existentials: Vec<Var>,
}

impl ExRule {
    pub fn new(id: impl Into<Name>, body: Vec<ExAtom>, head: Vec<NormalAtom>, existentials: Vec<Var>) -> Self {
        let id = id.into();
        ExRule {
            origin: id.clone(),
            id,
            pinned: Vec::new(),
            body,
            head,
            existentials,
        }
    }

    pub fn body_vars(&self) -> BTreeSet<Var> {
        self.body.iter().flat_map(|a| a.vars()).cloned().collect()
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        self.head.iter().flat_map(|a| a.vars()).cloned().collect()
    }

    pub fn frontier(&self) -> BTreeSet<Var> {
        let mut f = self.head_vars();
        for z in &self.existentials {
            f.remove(z);
        }
        f
    }

    /// Same rule up to identity (id, origin, pinned are ignored).
    pub fn same_shape(&self, other: &ExRule) -> bool {
        self.body == other.body && self.head == other.head && self.existentials == other.existentials
    }
}

/// Boolean conjunctive query over existential-rule atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExBcq {
    pub exists: Vec<Var>,
    pub atoms: Vec<ExAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxPredicates {
    pub boxed: PredicateSig,
    pub at: PredicateSig,
}

impl AuxPredicates {
    pub fn for_predicate(name: &str, arity: usize) -> Self {
        let mut box_sorts = vec![Sort::Abstract; arity];
        box_sorts.extend([Sort::Time; 2]);
        let mut at_sorts = vec![Sort::Abstract; arity];
        at_sorts.extend([Sort::Time; 3]);
        AuxPredicates {
            boxed: PredicateSig {
                name: box_name(name),
                arity: arity + 2,
                sorts: box_sorts,
            },
            at: PredicateSig {
                name: at_name(name),
                arity: arity + 3,
                sorts: at_sorts,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RewriteOutput {
    pub rules: ExRuleSet,
    pub max_window: u32,
    /// Original predicate name to its auxiliary predicates (⊤ included).
    pub predicate_map: BTreeMap<Name, AuxPredicates>,
}

pub fn box_name(p: &str) -> Name {
    format!("{BOX_PREFIX}{p}").into()
}

pub fn at_name(p: &str) -> Name {
    format!("{AT_PREFIX}{p}").into()
}

/// Names that user programs and streams may not use as predicates.
pub fn is_reserved_predicate(p: &str) -> bool {
    p == LEQ || p == PLUS_EQ || p == TOP || p.starts_with(BOX_PREFIX) || p.starts_with(AT_PREFIX) || p.contains("__t")
}

/// Generates variable names not yet used in a rule.
pub(crate) struct FreshVars {
    used: BTreeSet<Name>,
}

impl FreshVars {
    pub(crate) fn new<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Self {
        FreshVars {
            used: vars.into_iter().map(|v| v.name.clone()).collect(),
        }
    }

    pub(crate) fn fresh(&mut self, base: &str, sort: Sort) -> Var {
        let mut name: Name = base.into();
        let mut k = 0;
        while self.used.contains(&name) {
            k += 1;
            name = format!("{base}{k}").into();
        }
        self.used.insert(name.clone());
        Var::new(name, sort)
    }
}

fn tp(t: TimePoint) -> Term {
    Term::Time(t)
}

fn box_atom(b: &BaseAtom, n: Term, c: Term) -> NormalAtom {
    let mut args = b.args().to_vec();
    args.push(n);
    args.push(c);
    NormalAtom::new(box_name(b.pred()), args)
}

fn at_atom(b: &BaseAtom, n: Term, t: Term, c: Term) -> NormalAtom {
    let mut args = b.args().to_vec();
    args.extend([n, t, c]);
    NormalAtom::new(at_name(b.pred()), args)
}

fn eliminate_diamond_atoms(atoms: &mut [LarsAtom], fresh: &mut FreshVars) {
    for a in atoms.iter_mut() {
        if let LarsAtom::WinDiamond(n, b) = a {
            let t = fresh.fresh("T", Sort::Time);
            *a = LarsAtom::WinAt(*n, Term::Var(t), b.clone());
        }
    }
}

/// Replaces every `⊞ⁿ◇ b` by `⊞ⁿ @_T b` with `T` fresh per occurrence.
pub fn eliminate_diamond(p: &Program) -> Program {
    let mut out = p.clone();
    for r in &mut out.rules {
        let mut fresh = FreshVars::new(&r.all_vars());
        eliminate_diamond_atoms(&mut r.body, &mut fresh);
    }
    out
}

pub fn eliminate_diamond_query(q: &Bcq) -> Bcq {
    let mut fresh = FreshVars::new(&q.exists);
    let mut atoms = q.atoms.clone();
    eliminate_diamond_atoms(&mut atoms, &mut fresh);
    Bcq::new(atoms)
}

/// Rewrites body atoms relative to the current-time variable `c`.
fn rewrite_body_atom(a: &LarsAtom, c: &Term, fresh: &mut FreshVars) -> ExAtom {
    match a {
        LarsAtom::Arith(ar) => ExAtom::Arith(ar.clone()),
        LarsAtom::Plain(b) => ExAtom::Normal(box_atom(b, tp(0), c.clone())),
        LarsAtom::At(t, b) => ExAtom::Normal(box_atom(b, tp(0), t.clone())),
        LarsAtom::WinBox(n, b) => ExAtom::Normal(box_atom(b, tp(*n), c.clone())),
        LarsAtom::WinAt(n, t, b) => ExAtom::Normal(at_atom(b, tp(*n), t.clone(), c.clone())),
        LarsAtom::WinDiamond(n, b) => {
            let t = Term::Var(fresh.fresh("T", Sort::Time));
            ExAtom::Normal(at_atom(b, tp(*n), t, c.clone()))
        }
    }
}

fn rewrite_head_atom(h: &HeadAtom, c: &Term) -> NormalAtom {
    match h {
        HeadAtom::Plain(b) => box_atom(b, tp(0), c.clone()),
        HeadAtom::At(t, b) => box_atom(b, tp(0), t.clone()),
    }
}

/// Rewrites one rule. With `guard_now`, bodies that do not mention the
/// current-time variable get `box_top(0, C)`.
pub(crate) fn rewrite_rule(r: &Rule, guard_now: bool) -> ExRule {
    let mut fresh = FreshVars::new(&r.all_vars());
    let c = Term::Var(fresh.fresh("C", Sort::Time));
    let mut body: Vec<ExAtom> = r.body.iter().map(|a| rewrite_body_atom(a, &c, &mut fresh)).collect();
    let head: Vec<NormalAtom> = r.head.iter().map(|h| rewrite_head_atom(h, &c)).collect();
    if guard_now && !body.iter().any(|a| a.terms().contains(&&c)) {
        body.push(ExAtom::Normal(box_atom(&BaseAtom::Top, tp(0), c)));
    }
    ExRule::new(r.id.clone(), body, head, r.existentials.clone())
}

fn vars(names: &[&str]) -> Vec<Term> {
    names.iter().map(|n| Term::tvar(*n)).collect()
}

/// Auxiliary window axioms for predicate `p` of arity `arity` (rules 2–6).
pub fn aux_rules(p: &str, arity: usize, m: u32) -> ExRuleSet {
    let xs: Vec<Term> = (1..=arity).map(|i| Term::avar(format!("X{i}"))).collect();
    let boxed = |n: Term, c: Term| {
        let mut args = xs.clone();
        args.extend([n, c]);
        NormalAtom::new(box_name(p), args)
    };
    let at = |n: Term, t: Term, c: Term| {
        let mut args = xs.clone();
        args.extend([n, t, c]);
        NormalAtom::new(at_name(p), args)
    };
    let [n, n1, c, c1, t, i]: [Term; 6] = vars(&["N", "N1", "C", "C1", "T", "I"]).try_into().unwrap();
    let m = tp(m);
    let norm = ExAtom::Normal;
    let leq = |a: &Term, b: &Term| ExAtom::Arith(ArithAtom::Leq(a.clone(), b.clone()));
    let plus = |a: &Term, b: &Term, c: &Term| ExAtom::Arith(ArithAtom::PlusEq(a.clone(), b.clone(), c.clone()));
    vec![
        ExRule::new(
            format!("aux2_{p}"),
            vec![norm(boxed(tp(0), tp(0)))],
            vec![boxed(m.clone(), tp(0))],
            vec![],
        ),
        ExRule::new(
            format!("aux3_{p}"),
            vec![norm(boxed(n1.clone(), c.clone())), plus(&n1, &n, &tp(1))],
            vec![boxed(n.clone(), c.clone())],
            vec![],
        ),
        ExRule::new(
            format!("aux4_{p}"),
            vec![
                norm(boxed(n.clone(), c.clone())),
                plus(&n1, &n, &tp(1)),
                leq(&n1, &m),
                plus(&c1, &c, &tp(1)),
                norm(boxed(tp(0), c1.clone())),
            ],
            vec![boxed(n1.clone(), c1.clone())],
            vec![],
        ),
        ExRule::new(
            format!("aux5_{p}"),
            vec![norm(boxed(tp(0), c.clone()))],
            vec![at(tp(0), c.clone(), c.clone())],
            vec![],
        ),
        ExRule::new(
            format!("aux6_{p}"),
            vec![
                norm(at(n.clone(), t.clone(), c.clone())),
                leq(&n1, &m),
                plus(&n1, &n, &tp(1)),
                leq(&i, &tp(1)),
                plus(&c1, &c, &i),
            ],
            vec![at(n1, t, c1)],
            vec![],
        ),
    ]
}

/// `0 ≤ C → box_top(0, C)`.
pub fn top_rule() -> ExRule {
    let c = Term::tvar("C");
    ExRule::new(
        "aux1",
        vec![ExAtom::Arith(ArithAtom::Leq(tp(0), c.clone()))],
        vec![box_atom(&BaseAtom::Top, tp(0), c)],
        vec![],
    )
}

/// Rewrites a diamond-free program, with window axioms for every predicate of
/// its signature and for ⊤.
pub fn rewrite_program(p: &Program) -> RewriteOutput {
    rewrite_program_with_window(p, 0)
}

/// As [`rewrite_program`], with the window bound raised to at least
/// `min_window` (used when a query mentions larger windows than the program).
pub fn rewrite_program_with_window(p: &Program, min_window: u32) -> RewriteOutput {
    let m = p.max_window().max(min_window);
    let mut rules: ExRuleSet = p.rules.iter().map(|r| rewrite_rule(r, true)).collect();
    rules.push(top_rule());
    let mut predicate_map = BTreeMap::new();
    let mut preds: Vec<(Name, usize)> = vec![(Name::from(TOP), 0)];
    preds.extend(p.signature.values().map(|s| (s.name.clone(), s.arity)));
    for (name, arity) in preds {
        rules.extend(aux_rules(&name, arity, m));
        predicate_map.insert(name.clone(), AuxPredicates::for_predicate(&name, arity));
    }
    RewriteOutput {
        rules,
        max_window: m,
        predicate_map,
    }
}

/// `box_p(t⃗, 0, s)` for every `p(t⃗) ∈ v(s)`.
pub fn rewrite_stream(s: &Stream) -> FactSet {
    s.iter()
        .map(|(t, a)| box_atom(&BaseAtom::Atom(a.clone()), tp(0), tp(t)))
        .collect()
}

/// The query at `t`: rewritten atoms plus `C ≤ t ∧ t ≤ C`.
pub fn rewrite_query(q: &Bcq, t: TimePoint) -> ExBcq {
    let q = eliminate_diamond_query(q);
    let mut fresh = FreshVars::new(&q.exists);
    let c = Term::Var(fresh.fresh("C", Sort::Time));
    let mut atoms: Vec<ExAtom> = q.atoms.iter().map(|a| rewrite_body_atom(a, &c, &mut fresh)).collect();
    atoms.push(ExAtom::Arith(ArithAtom::Leq(c.clone(), tp(t))));
    atoms.push(ExAtom::Arith(ArithAtom::Leq(tp(t), c.clone())));
    let mut exists = q.exists.clone();
    for a in &atoms {
        for v in a.vars() {
            if !exists.contains(v) {
                exists.push(v.clone());
            }
        }
    }
    ExBcq { exists, atoms }
}

/// All true `leq` and `plusEq` facts over the timeline.
pub fn rewrite_timeline(timeline: Timeline) -> FactSet {
    let h = timeline.horizon;
    let mut out = FactSet::new();
    for a in 0..=h {
        for b in a..=h {
            out.insert(NormalAtom::new(LEQ, vec![tp(a), tp(b)]));
        }
        for b in 0..=a {
            out.insert(NormalAtom::new(PLUS_EQ, vec![tp(a), tp(b), tp(a - b)]));
        }
    }
    out
}

fn clip_atoms(atoms: &mut [LarsAtom], cap: u32) {
    for a in atoms {
        match a {
            LarsAtom::WinAt(n, _, _) | LarsAtom::WinDiamond(n, _) | LarsAtom::WinBox(n, _)
                if *n > cap => {
                    *n = cap;
                }
            _ => {}
        }
    }
}

/// Caps every window size at `|T| - 1`.
pub fn clip_windows(p: &Program, timeline: Timeline) -> Program {
    let mut out = p.clone();
    for r in &mut out.rules {
        clip_atoms(&mut r.body, timeline.horizon);
    }
    out
}

pub fn clip_query(q: &Bcq, timeline: Timeline) -> Bcq {
    let mut atoms = q.atoms.clone();
    clip_atoms(&mut atoms, timeline.horizon);
    Bcq {
        exists: q.exists.clone(),
        atoms,
    }
}

/// A query compiled into the program: `goal` at time 0 is entailed iff the
/// original query is entailed at the original time point.
#[derive(Clone, Debug)]
pub struct CompiledQuery {
    pub program: Program,
    pub data: Stream,
    pub goal: NormalAtom,
}

fn fresh_predicate(base: &str, taken: &dyn Fn(&str) -> bool) -> Name {
    let mut name = base.to_string();
    let mut k = 0;
    while taken(&name) {
        k += 1;
        name = format!("{base}{k}");
    }
    name.into()
}

/// Adds `q ∧ @_N time_q ∧ ⊞⁰ @_N ⊤ → @_0 yes` and the fact `time_q` at `t`.
pub fn compile_query(p: &Program, d: &Stream, t: TimePoint, q: &Bcq) -> CompiledQuery {
    let mut used: BTreeSet<Name> = p.signature.keys().cloned().collect();
    used.extend(d.atoms().map(|a| a.pred.clone()));
    for a in &q.atoms {
        if let Some(BaseAtom::Atom(b)) = a.base() {
            used.insert(b.pred.clone());
        }
    }
    let time_q = fresh_predicate("time_q", &|n| used.contains(n));
    let yes = fresh_predicate("yes", &|n| used.contains(n) || n == &*time_q);
    let mut fresh = FreshVars::new(&q.exists);
    let n = Term::Var(fresh.fresh("N", Sort::Time));
    let time_atom = BaseAtom::Atom(NormalAtom::new(time_q.clone(), vec![]));
    let yes_atom = NormalAtom::new(yes.clone(), vec![]);
    let mut body = q.atoms.clone();
    body.push(LarsAtom::At(n.clone(), time_atom));
    body.push(LarsAtom::WinAt(0, n, BaseAtom::Top));
    let mut ids: BTreeSet<Name> = p.rules.iter().map(|r| r.id.clone()).collect();
    let id = {
        let mut id: Name = "r_q".into();
        let mut k = 0;
        while ids.contains(&id) {
            k += 1;
            id = format!("r_q{k}").into();
        }
        ids.insert(id.clone());
        id
    };
    let rule = Rule {
        id,
        body,
        head: vec![HeadAtom::At(tp(0), BaseAtom::Atom(yes_atom.clone()))],
        existentials: vec![],
    };
    let mut program = p.clone();
    program.rules.push(rule);
    program.signature.insert(time_q.clone(), PredicateSig::simple(time_q.clone(), 0));
    program.signature.insert(yes.clone(), PredicateSig::simple(yes, 0));
    let mut data = d.clone();
    data.insert(t, NormalAtom::new(time_q, vec![]));
    CompiledQuery {
        program,
        data,
        goal: yes_atom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ba(p: &str, args: Vec<Term>) -> BaseAtom {
        BaseAtom::Atom(NormalAtom::new(p, args))
    }

    #[test]
    fn diamond_elimination_uses_distinct_fresh_vars() {
        let r = Rule {
            id: "r".into(),
            body: vec![
                LarsAtom::WinDiamond(5, ba("warn", vec![Term::avar("X")])),
                LarsAtom::WinDiamond(2, ba("p", vec![Term::avar("X")])),
            ],
            head: vec![HeadAtom::Plain(ba("q", vec![Term::avar("X")]))],
            existentials: vec![],
        };
        let p = eliminate_diamond(&Program::from_rules(vec![r]));
        let ts: Vec<&Term> = p.rules[0]
            .body
            .iter()
            .map(|a| match a {
                LarsAtom::WinAt(_, t, _) => t,
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_ne!(ts[0], ts[1]);
        assert!(ts.iter().all(|t| t.sort() == Sort::Time));
    }

    #[test]
    fn timeline_facts() {
        let t1 = rewrite_timeline(Timeline::new(1));
        let l = |a, b| NormalAtom::new(LEQ, vec![tp(a), tp(b)]);
        let pl = |a, b, c| NormalAtom::new(PLUS_EQ, vec![tp(a), tp(b), tp(c)]);
        let expected: FactSet = [l(0, 0), l(0, 1), l(1, 1), pl(0, 0, 0), pl(1, 0, 1), pl(1, 1, 0)].into();
        assert_eq!(t1, expected);
        assert_eq!(rewrite_timeline(Timeline::new(0)).len(), 2);
    }

    #[test]
    fn timeline_size_matches_enumeration() {
        for h in 0..=20u32 {
            let facts = rewrite_timeline(Timeline::new(h));
            let mut leq = 0;
            let mut plus = 0;
            for a in 0..=h {
                for b in 0..=h {
                    if a <= b {
                        leq += 1;
                    }
                    for c in 0..=h {
                        if a == b + c {
                            plus += 1;
                        }
                    }
                }
            }
            let n = u64::from(h);
            assert_eq!(leq + plus, facts.len());
            assert_eq!(facts.len() as u64, (n + 1) * (n + 2) / 2 + plus as u64);
        }
    }

    #[test]
    fn empty_program_gets_only_axioms() {
        let mut p = Program::default();
        p.signature.insert("p".into(), PredicateSig::simple("p", 1));
        let out = rewrite_program(&p);
        assert_eq!(out.max_window, 0);
        assert_eq!(out.rules.len(), 11);
        assert_eq!(out.predicate_map["p"].boxed.arity, 3);
        assert_eq!(out.predicate_map["p"].at.arity, 4);
        assert_eq!(out.predicate_map[TOP].boxed.arity, 2);
    }

    #[test]
    fn stream_and_query() {
        let mut s = Stream::new(Timeline::new(0));
        s.insert(0, NormalAtom::new("p", vec![Term::constant("a")]));
        let f = rewrite_stream(&s);
        assert_eq!(
            f,
            [NormalAtom::new("box_p", vec![Term::constant("a"), tp(0), tp(0)])].into()
        );
        assert!(rewrite_stream(&Stream::new(Timeline::new(3))).is_empty());

        let q = Bcq::new(vec![LarsAtom::Plain(ba("warn", vec![Term::avar("X")]))]);
        let rq = rewrite_query(&q, 4);
        let c = Term::tvar("C");
        assert_eq!(
            rq.atoms,
            vec![
                ExAtom::Normal(NormalAtom::new("box_warn", vec![Term::avar("X"), tp(0), c.clone()])),
                ExAtom::Arith(ArithAtom::Leq(c.clone(), tp(4))),
                ExAtom::Arith(ArithAtom::Leq(tp(4), c)),
            ]
        );
    }

    #[test]
    fn clipping() {
        let r = Rule {
            id: "r".into(),
            body: vec![LarsAtom::WinBox(5, ba("p", vec![Term::avar("X")]))],
            head: vec![HeadAtom::Plain(ba("q", vec![Term::avar("X")]))],
            existentials: vec![],
        };
        let p = Program::from_rules(vec![r]);
        let c = clip_windows(&p, Timeline::new(2));
        assert_eq!(c.rules[0].body[0].window(), Some(2));
        let c = clip_windows(&p, Timeline::new(5));
        assert_eq!(c.rules[0].body[0].window(), Some(5));
    }
}
