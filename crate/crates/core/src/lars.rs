//! Syntax tree of LARS⁺ programs, streams and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Name, Sort, Term, TimePoint, Var};

/// Name of the nullary predicate standing for ⊤ once atoms are flattened.
pub const TOP: &str = "top";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalAtom {
    pub pred: Name,
    pub args: Vec<Term>,
}

impl NormalAtom {
    pub fn new(pred: impl Into<Name>, args: Vec<Term>) -> Self {
        NormalAtom {
            pred: pred.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for NormalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `t1 <= t2` or `t1 = t2 + t3` over time terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithAtom {
    Leq(Term, Term),
    PlusEq(Term, Term, Term),
}

impl ArithAtom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            ArithAtom::Leq(a, b) => vec![a, b],
            ArithAtom::PlusEq(a, b, c) => vec![a, b, c],
        }
    }

    pub fn terms_mut(&mut self) -> Vec<&mut Term> {
        match self {
            ArithAtom::Leq(a, b) => vec![a, b],
            ArithAtom::PlusEq(a, b, c) => vec![a, b, c],
        }
    }

    /// Truth over the naturals; `None` if some argument is not a time point.
    pub fn eval(&self) -> Option<bool> {
        match self {
            ArithAtom::Leq(a, b) => Some(a.as_time()? <= b.as_time()?),
            ArithAtom::PlusEq(a, b, c) => {
                let (a, b, c) = (a.as_time()?, b.as_time()?, c.as_time()?);
                Some(b.checked_add(c) == Some(a))
            }
        }
    }

    /// Single-sorted view as an ordinary atom over `leq`/`plusEq`.
    pub fn to_normal(&self) -> NormalAtom {
        match self {
            ArithAtom::Leq(a, b) => NormalAtom::new(crate::rewrite::LEQ, vec![a.clone(), b.clone()]),
            ArithAtom::PlusEq(a, b, c) => {
                NormalAtom::new(crate::rewrite::PLUS_EQ, vec![a.clone(), b.clone(), c.clone()])
            }
        }
    }
}

/// The `b` of the LARS⁺ grammar: a null-free simple atom or ⊤.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseAtom {
    Top,
    Atom(NormalAtom),
}

impl BaseAtom {
    /// Predicate name, using [`TOP`] for ⊤.
    pub fn pred(&self) -> &str {
        match self {
            BaseAtom::Top => TOP,
            BaseAtom::Atom(a) => &a.pred,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            BaseAtom::Top => &[],
            BaseAtom::Atom(a) => &a.args,
        }
    }

    pub fn to_normal(&self) -> NormalAtom {
        match self {
            BaseAtom::Top => NormalAtom::new(TOP, vec![]),
            BaseAtom::Atom(a) => a.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LarsAtom {
    Arith(ArithAtom),
    Plain(BaseAtom),
    /// `@_T b`
    At(Term, BaseAtom),
    /// `⊞ⁿ @_T b`
    WinAt(u32, Term, BaseAtom),
    /// `⊞ⁿ ◇ b`
    WinDiamond(u32, BaseAtom),
    /// `⊞ⁿ □ b`
    WinBox(u32, BaseAtom),
}

impl LarsAtom {
    pub fn base(&self) -> Option<&BaseAtom> {
        match self {
            LarsAtom::Arith(_) => None,
            LarsAtom::Plain(b)
            | LarsAtom::At(_, b)
            | LarsAtom::WinAt(_, _, b)
            | LarsAtom::WinDiamond(_, b)
            | LarsAtom::WinBox(_, b) => Some(b),
        }
    }

    pub fn window(&self) -> Option<u32> {
        match self {
            LarsAtom::WinAt(n, _, _) | LarsAtom::WinDiamond(n, _) | LarsAtom::WinBox(n, _) => Some(*n),
            _ => None,
        }
    }

    /// All terms of the atom: time terms first, then the base arguments.
    pub fn terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        match self {
            LarsAtom::Arith(a) => out.extend(a.terms()),
            LarsAtom::At(t, _) | LarsAtom::WinAt(_, t, _) => out.push(t),
            _ => {}
        }
        if let Some(b) = self.base() {
            out.extend(b.args());
        }
        out
    }

    pub fn vars(&self) -> Vec<&Var> {
        self.terms().into_iter().filter_map(Term::as_var).collect()
    }

    /// Applies `f` to every term in place.
    pub fn map_terms(&mut self, mut f: impl FnMut(&mut Term)) {
        fn base(b: &mut BaseAtom, f: &mut impl FnMut(&mut Term)) {
            if let BaseAtom::Atom(a) = b {
                a.args.iter_mut().for_each(f);
            }
        }
        match self {
            LarsAtom::Arith(a) => a.terms_mut().into_iter().for_each(&mut f),
            LarsAtom::Plain(b) | LarsAtom::WinDiamond(_, b) | LarsAtom::WinBox(_, b) => base(b, &mut f),
            LarsAtom::At(t, b) | LarsAtom::WinAt(_, t, b) => {
                f(t);
                base(b, &mut f);
            }
        }
    }
}

/// Head atoms are `b` or `@_T b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadAtom {
    Plain(BaseAtom),
    At(Term, BaseAtom),
}

impl HeadAtom {
    pub fn base(&self) -> &BaseAtom {
        match self {
            HeadAtom::Plain(b) | HeadAtom::At(_, b) => b,
        }
    }

    pub fn time(&self) -> Option<&Term> {
        match self {
            HeadAtom::Plain(_) => None,
            HeadAtom::At(t, _) => Some(t),
        }
    }

    pub fn to_lars(&self) -> LarsAtom {
        match self {
            HeadAtom::Plain(b) => LarsAtom::Plain(b.clone()),
            HeadAtom::At(t, b) => LarsAtom::At(t.clone(), b.clone()),
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        self.time()
            .into_iter()
            .chain(self.base().args())
            .filter_map(Term::as_var)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: Name,
    pub body: Vec<LarsAtom>,
    pub head: Vec<HeadAtom>,
    pub existentials: Vec<Var>,
}

impl Rule {
    pub fn body_vars(&self) -> BTreeSet<Var> {
        self.body.iter().flat_map(|a| a.vars()).cloned().collect()
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        self.head.iter().flat_map(|a| a.vars()).cloned().collect()
    }

    /// Head variables that are not existentially quantified.
    pub fn frontier(&self) -> BTreeSet<Var> {
        let mut h = self.head_vars();
        for v in &self.existentials {
            h.remove(v);
        }
        h
    }

    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut v = self.body_vars();
        v.extend(self.head_vars());
        v
    }

    pub fn is_existential(&self) -> bool {
        !self.existentials.is_empty()
    }

    /// Ground time points occurring in the head.
    pub fn head_time_points(&self) -> impl Iterator<Item = TimePoint> + '_ {
        self.head.iter().filter_map(|h| h.time().and_then(Term::as_time))
    }

    /// Predicates of all normal atoms, with arities.
    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.body
            .iter()
            .filter_map(LarsAtom::base)
            .chain(self.head.iter().map(HeadAtom::base))
            .filter_map(|b| match b {
                BaseAtom::Top => None,
                BaseAtom::Atom(a) => Some((&*a.pred, a.arity())),
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateSig {
    pub name: Name,
    pub arity: usize,
    pub sorts: Vec<Sort>,
}

impl PredicateSig {
    pub fn simple(name: impl Into<Name>, arity: usize) -> Self {
        PredicateSig {
            name: name.into(),
            arity,
            sorts: vec![Sort::Abstract; arity],
        }
    }

    pub fn is_simple(&self) -> bool {
        self.sorts.iter().all(|s| *s == Sort::Abstract)
    }
}

pub type Signature = BTreeMap<Name, PredicateSig>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub signature: Signature,
}

impl Program {
    /// Builds a program whose signature is collected from its rules.
    pub fn from_rules(rules: Vec<Rule>) -> Self {
        let mut signature = Signature::new();
        for r in &rules {
            for (p, n) in r.predicates() {
                signature
                    .entry(Name::from(p))
                    .or_insert_with(|| PredicateSig::simple(p, n));
            }
        }
        Program { rules, signature }
    }

    /// Adds the predicates of `stream` to the signature.
    pub fn with_stream_signature(mut self, stream: &Stream) -> Self {
        for a in stream.atoms() {
            self.signature
                .entry(a.pred.clone())
                .or_insert_with(|| PredicateSig::simple(a.pred.clone(), a.arity()));
        }
        self
    }

    /// The largest window size used, 0 if there is none.
    pub fn max_window(&self) -> u32 {
        self.rules
            .iter()
            .flat_map(|r| r.body.iter().filter_map(LarsAtom::window))
            .max()
            .unwrap_or(0)
    }

    pub fn is_existential_free(&self) -> bool {
        self.rules.iter().all(|r| !r.is_existential())
    }

    /// Predicates occurring in some rule head.
    pub fn intensional(&self) -> BTreeSet<Name> {
        self.rules
            .iter()
            .flat_map(|r| r.head.iter())
            .filter_map(|h| match h.base() {
                BaseAtom::Atom(a) => Some(a.pred.clone()),
                BaseAtom::Top => None,
            })
            .collect()
    }
}

/// The interval `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Timeline {
    pub horizon: TimePoint,
}

impl Timeline {
    pub fn new(horizon: TimePoint) -> Self {
        Timeline { horizon }
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        t <= self.horizon
    }

    /// Number of time points, `h + 1`.
    pub fn len(&self) -> u32 {
        self.horizon + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> std::ops::RangeInclusive<TimePoint> {
        0..=self.horizon
    }
}

impl fmt::Display for Timeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0..{}", self.horizon)
    }
}

/// A timeline with an evaluation function; `eval(t)` is empty off the timeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    pub timeline: Timeline,
    eval: BTreeMap<TimePoint, BTreeSet<NormalAtom>>,
}

impl Stream {
    pub fn new(timeline: Timeline) -> Self {
        Stream {
            timeline,
            eval: BTreeMap::new(),
        }
    }

    /// Adds a ground atom at `t`. Returns false if it was already present.
    ///
    /// Panics if `t` is off the timeline or the atom is not ground; callers
    /// that handle untrusted input check first.
    pub fn insert(&mut self, t: TimePoint, atom: NormalAtom) -> bool {
        assert!(self.timeline.contains(t), "time point {t} outside {}", self.timeline);
        assert!(atom.is_ground(), "stream atoms must be ground: {atom}");
        self.eval.entry(t).or_default().insert(atom)
    }

    pub fn eval(&self, t: TimePoint) -> impl Iterator<Item = &NormalAtom> {
        self.eval.get(&t).into_iter().flatten()
    }

    pub fn eval_set(&self, t: TimePoint) -> Option<&BTreeSet<NormalAtom>> {
        self.eval.get(&t)
    }

    pub fn contains(&self, t: TimePoint, atom: &NormalAtom) -> bool {
        self.eval.get(&t).is_some_and(|s| s.contains(atom))
    }

    /// All `(t, atom)` pairs in time order.
    pub fn iter(&self) -> impl Iterator<Item = (TimePoint, &NormalAtom)> {
        self.eval.iter().flat_map(|(t, s)| s.iter().map(move |a| (*t, a)))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &NormalAtom> {
        self.eval.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.eval.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Abstract terms (constants and nulls) occurring anywhere in the stream.
    pub fn abstract_terms(&self) -> BTreeSet<Term> {
        self.atoms()
            .flat_map(|a| a.args.iter())
            .filter(|t| t.sort() == Sort::Abstract)
            .cloned()
            .collect()
    }

    /// Pointwise inclusion `self ⊆ other` (timelines not compared).
    pub fn is_subset_of(&self, other: &Stream) -> bool {
        self.iter().all(|(t, a)| other.contains(t, a))
    }
}

/// A sort-preserving variable binding.
pub type TMatch = BTreeMap<Var, Term>;

/// `∃x⃗. Q` where every free variable of `Q` is existential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bcq {
    pub exists: Vec<Var>,
    pub atoms: Vec<LarsAtom>,
}

impl Bcq {
    pub fn new(atoms: Vec<LarsAtom>) -> Self {
        let mut exists: Vec<Var> = Vec::new();
        for a in &atoms {
            for v in a.vars() {
                if !exists.contains(v) {
                    exists.push(v.clone());
                }
            }
        }
        Bcq { exists, atoms }
    }

    pub fn max_window(&self) -> u32 {
        self.atoms.iter().filter_map(LarsAtom::window).max().unwrap_or(0)
    }
}
