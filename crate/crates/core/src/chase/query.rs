//! Homomorphisms from conjunctions of atoms into ground fact sets.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::lars::{NormalAtom, TMatch};
use crate::rewrite::{ExAtom, ExBcq, FactSet};
use crate::term::Term;

/// Facts grouped by predicate, with a lookup by (predicate, position, term).
pub struct FactIndex<'a> {
    by_pred: HashMap<&'a str, Vec<&'a NormalAtom>>,
    by_pos: HashMap<&'a str, Vec<HashMap<&'a Term, Vec<&'a NormalAtom>>>>,
}

impl<'a> FactIndex<'a> {
    pub fn new(facts: impl IntoIterator<Item = &'a NormalAtom>) -> Self {
        let mut by_pred: HashMap<&str, Vec<&NormalAtom>> = HashMap::new();
        let mut by_pos: HashMap<&str, Vec<HashMap<&Term, Vec<&NormalAtom>>>> = HashMap::new();
        for f in facts {
            by_pred.entry(&f.pred).or_default().push(f);
            let cols = by_pos.entry(&f.pred).or_default();
            if cols.len() < f.args.len() {
                cols.resize_with(f.args.len(), HashMap::new);
            }
            for (i, t) in f.args.iter().enumerate() {
                cols[i].entry(t).or_default().push(f);
            }
        }
        FactIndex { by_pred, by_pos }
    }

    pub fn contains(&self, a: &NormalAtom) -> bool {
        match a.args.first() {
            None => self.by_pred.get(&*a.pred).is_some_and(|v| !v.is_empty()),
            Some(t) => self.column(&a.pred, 0, t).contains(&a),
        }
    }

    fn column(&self, pred: &str, i: usize, value: &Term) -> &[&'a NormalAtom] {
        self.by_pos
            .get(pred)
            .and_then(|cols| cols.get(i))
            .and_then(|c| c.get(value))
            .map_or(&[][..], |v| v)
    }

    /// Facts that may match `a` under `binding`.
    fn candidates(&self, a: &NormalAtom, binding: &TMatch) -> &[&'a NormalAtom] {
        let mut best: Option<&[&NormalAtom]> = None;
        for (i, t) in a.args.iter().enumerate() {
            let value = match t {
                Term::Var(v) => match binding.get(v) {
                    Some(x) => x,
                    None => continue,
                },
                other => other,
            };
            let list = self.column(&a.pred, i, value);
            if best.is_none_or(|b| list.len() < b.len()) {
                best = Some(list);
            }
        }
        best.unwrap_or_else(|| self.by_pred.get(&*a.pred).map_or(&[][..], |v| v))
    }
}

/// Extends `binding` so that `pattern` maps onto `fact`; sorts must agree.
fn unify(pattern: &NormalAtom, fact: &NormalAtom, binding: &mut TMatch, trail: &mut Vec<crate::term::Var>) -> bool {
    if pattern.pred != fact.pred || pattern.args.len() != fact.args.len() {
        return false;
    }
    for (p, f) in pattern.args.iter().zip(&fact.args) {
        match p {
            Term::Var(v) => match binding.get(v) {
                Some(b) if b != f => return false,
                Some(_) => {}
                None => {
                    if f.sort() != v.sort {
                        return false;
                    }
                    binding.insert(v.clone(), f.clone());
                    trail.push(v.clone());
                }
            },
            other if other != f => return false,
            _ => {}
        }
    }
    true
}

fn search<'a, B>(
    atoms: &[NormalAtom],
    done: &mut [bool],
    index: &FactIndex<'a>,
    binding: &mut TMatch,
    f: &mut dyn FnMut(&TMatch) -> ControlFlow<B>,
) -> ControlFlow<B> {
    // Most constrained atom first: the one with the fewest candidate facts.
    let mut pick: Option<(usize, &[&NormalAtom])> = None;
    for (i, a) in atoms.iter().enumerate() {
        if done[i] {
            continue;
        }
        let c = index.candidates(a, binding);
        if pick.is_none_or(|(_, p)| c.len() < p.len()) {
            pick = Some((i, c));
        }
        if c.is_empty() {
            break;
        }
    }
    let Some((i, cands)) = pick else {
        return f(binding);
    };
    done[i] = true;
    let mut trail = Vec::new();
    for fact in cands {
        if unify(&atoms[i], fact, binding, &mut trail) {
            search(atoms, done, index, binding, f)?;
        }
        for v in trail.drain(..) {
            binding.remove(&v);
        }
    }
    done[i] = false;
    ControlFlow::Continue(())
}

/// Calls `f` for every homomorphism of `atoms` into the indexed facts.
pub fn for_each_homomorphism<B>(
    atoms: &[NormalAtom],
    index: &FactIndex<'_>,
    mut f: impl FnMut(&TMatch) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let mut done = vec![false; atoms.len()];
    search(atoms, &mut done, index, &mut TMatch::new(), &mut f)
}

pub fn homomorphisms(atoms: &[NormalAtom], index: &FactIndex<'_>) -> Vec<TMatch> {
    let mut out = Vec::new();
    let _ = for_each_homomorphism::<()>(atoms, index, |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    });
    out
}

pub fn has_homomorphism(atoms: &[NormalAtom], index: &FactIndex<'_>) -> bool {
    for_each_homomorphism(atoms, index, |_| ControlFlow::Break(())).is_break()
}

/// Whether a sort-preserving homomorphism maps the query into `facts`.
/// Arithmetic atoms are looked up as `leq`/`plusEq` facts.
pub fn answer_bcq_on_facts(facts: &FactSet, q: &ExBcq) -> bool {
    let atoms: Vec<NormalAtom> = q.atoms.iter().map(ExAtom::to_normal).collect();
    has_homomorphism(&atoms, &FactIndex::new(facts))
}
