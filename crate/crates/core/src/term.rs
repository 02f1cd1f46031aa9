//! Two-sorted terms: abstract variables, constants and labelled nulls on one
//! side, time variables and time points on the other.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rustc_hash::FxHasher;

/// Interned-ish identifier used for predicates, constants and variable names.
pub type Name = Arc<str>;

/// A time point of a timeline `[0, h]`.
pub type TimePoint = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Abstract,
    Time,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Abstract => f.write_str("abstract"),
            Sort::Time => f.write_str("time"),
        }
    }
}

/// A variable together with its sort. Two variables with the same name but
/// different sorts are different variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Name,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<Name>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }

    pub fn abs(name: impl Into<Name>) -> Self {
        Var::new(name, Sort::Abstract)
    }

    pub fn time(name: impl Into<Name>) -> Self {
        Var::new(name, Sort::Time)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(Name),
    Time(TimePoint),
    Null(Null),
}

impl Term {
    pub fn constant(name: impl Into<Name>) -> Self {
        Term::Const(name.into())
    }

    pub fn avar(name: impl Into<Name>) -> Self {
        Term::Var(Var::abs(name))
    }

    pub fn tvar(name: impl Into<Name>) -> Self {
        Term::Var(Var::time(name))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Const(_) | Term::Null(_) => Sort::Abstract,
            Term::Time(_) => Sort::Time,
        }
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<TimePoint> {
        match self {
            Term::Time(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => f.write_str(c),
            Term::Time(t) => write!(f, "{t}"),
            Term::Null(n) => write!(f, "{n}"),
        }
    }
}

/// Identity of a labelled null: the rule that introduced it, the existential
/// variable it witnesses, and the binding of the frontier (sorted by variable
/// name) under which the rule fired.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NullKey {
    pub rule: Name,
    pub var: Name,
    pub frontier: Vec<(Name, Term)>,
}

/// A labelled null. Equal keys always denote the same null.
///
/// The hash of the key is computed once so that deeply nested nulls (a null
/// whose frontier mentions another null, and so on) hash in constant time.
#[derive(Clone)]
pub struct Null(Arc<NullInner>);

struct NullInner {
    key: NullKey,
    hash: u64,
    frontier_hash: u64,
}

impl Null {
    pub fn new(key: NullKey) -> Self {
        let mut h = FxHasher::default();
        key.hash(&mut h);
        let hash = h.finish();
        let mut h = FxHasher::default();
        key.frontier.hash(&mut h);
        let frontier_hash = h.finish();
        Null(Arc::new(NullInner {
            key,
            hash,
            frontier_hash,
        }))
    }

    pub fn key(&self) -> &NullKey {
        &self.0.key
    }
}

impl PartialEq for Null {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.key == other.0.key)
    }
}

impl Eq for Null {}

impl Hash for Null {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Null {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Null {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0
            .hash
            .cmp(&other.0.hash)
            .then_with(|| self.0.key.cmp(&other.0.key))
    }
}

impl fmt::Debug for Null {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Null {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let key = &self.0.key;
        write!(f, "_:{}_{}_{:016x}", key.rule, key.var, self.0.frontier_hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(rule: &str, frontier: Vec<(&str, Term)>) -> NullKey {
        NullKey {
            rule: rule.into(),
            var: "Y".into(),
            frontier: frontier.into_iter().map(|(n, t)| (Name::from(n), t)).collect(),
        }
    }

    #[test]
    fn equal_keys_are_equal_nulls() {
        let a = Null::new(key("r1", vec![("X", Term::constant("a"))]));
        let b = Null::new(key("r1", vec![("X", Term::constant("a"))]));
        let c = Null::new(key("r1", vec![("X", Term::constant("b"))]));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.to_string(), b.to_string());
        assert!(a.to_string().starts_with("_:r1_Y_"));
    }

    #[test]
    fn nested_nulls_compare_structurally() {
        let inner = Null::new(key("r1", vec![]));
        let a = Null::new(key("r2", vec![("X", Term::Null(inner.clone()))]));
        let b = Null::new(key("r2", vec![("X", Term::Null(Null::new(key("r1", vec![]))))]));
        assert_eq!(a, b);
        assert_eq!(a.cmp(&b), Ordering::Equal);
    }

    #[test]
    fn sorts_follow_kind() {
        assert_eq!(Term::constant("90").sort(), Sort::Abstract);
        assert_eq!(Term::Time(90).sort(), Sort::Time);
        assert_eq!(Term::tvar("T").sort(), Sort::Time);
        assert_eq!(Term::avar("X").sort(), Sort::Abstract);
    }
}
