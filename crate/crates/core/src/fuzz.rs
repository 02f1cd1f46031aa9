//! Random programs, streams and queries for property tests and benchmarks.
//!
//! Heads only use the intensional predicates `p/1` and `q/2`; streams only
//! use the extensional predicates `e/1` and `f/2`. Bodies use both.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lars::{ArithAtom, BaseAtom, Bcq, HeadAtom, LarsAtom, NormalAtom, Program, Rule, Stream, Timeline};
use crate::term::{Term, Var};

const EXTENSIONAL: [(&str, usize); 2] = [("e", 1), ("f", 2)];
const INTENSIONAL: [(&str, usize); 2] = [("p", 1), ("q", 2)];
const ABSTRACT_VARS: [&str; 3] = ["X", "Y", "Z"];
const TIME_VARS: [&str; 2] = ["T", "U"];

#[derive(Clone, Copy, Debug)]
pub struct FuzzConfig {
    pub max_rules: usize,
    pub max_body: usize,
    /// Timeline horizon; streams have `horizon + 1` time points.
    pub horizon: u32,
    pub constants: usize,
    pub max_window: u32,
    pub existentials: bool,
    /// Allow `@T`, `⊞ⁿ@T` and arithmetic atoms.
    pub temporal: bool,
    /// Facts per stream, at most.
    pub max_facts: usize,
    /// Probability of a rule of the form `@T a, U = T + 1 -> @U b`, which
    /// only propagates forward in time.
    pub forward: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_rules: 4,
            max_body: 3,
            horizon: 4,
            constants: 3,
            max_window: 3,
            existentials: false,
            temporal: true,
            max_facts: 10,
            forward: 0.0,
        }
    }
}

fn constant(rng: &mut impl Rng, cfg: &FuzzConfig) -> Term {
    Term::constant(["a", "b", "c", "d", "e"][rng.gen_range(0..cfg.constants.clamp(1, 5))])
}

fn abstract_term(rng: &mut impl Rng, cfg: &FuzzConfig) -> Term {
    if rng.gen_bool(0.2) {
        constant(rng, cfg)
    } else {
        Term::avar(*ABSTRACT_VARS.choose(rng).unwrap())
    }
}

fn time_term(rng: &mut impl Rng, cfg: &FuzzConfig) -> Term {
    if rng.gen_bool(0.3) {
        Term::Time(rng.gen_range(0..=cfg.horizon))
    } else {
        Term::tvar(*TIME_VARS.choose(rng).unwrap())
    }
}

fn base(rng: &mut impl Rng, cfg: &FuzzConfig, preds: &[(&str, usize)]) -> BaseAtom {
    let (p, n) = *preds.choose(rng).unwrap();
    BaseAtom::Atom(NormalAtom::new(p, (0..n).map(|_| abstract_term(rng, cfg)).collect()))
}

fn body_atom(rng: &mut impl Rng, cfg: &FuzzConfig, preds: &[(&str, usize)]) -> LarsAtom {
    let b = base(rng, cfg, preds);
    let n = rng.gen_range(0..=cfg.max_window);
    let kinds = if cfg.temporal { 6 } else { 3 };
    match rng.gen_range(0..kinds) {
        0 => LarsAtom::Plain(b),
        1 => LarsAtom::WinDiamond(n, b),
        2 => LarsAtom::WinBox(n, b),
        3 => LarsAtom::At(time_term(rng, cfg), b),
        4 => LarsAtom::WinAt(n, time_term(rng, cfg), b),
        _ => {
            let t = Term::tvar(TIME_VARS[0]);
            let u = Term::tvar(TIME_VARS[1]);
            if rng.gen_bool(0.5) {
                LarsAtom::Arith(ArithAtom::PlusEq(u, t, Term::Time(rng.gen_range(0..=1))))
            } else {
                LarsAtom::Arith(ArithAtom::Leq(t, u))
            }
        }
    }
}

/// A safe rule: every head variable is bound in the body or existential.
pub fn random_rule(rng: &mut impl Rng, cfg: &FuzzConfig, id: usize) -> Rule {
    let all: Vec<_> = EXTENSIONAL.iter().chain(&INTENSIONAL).copied().collect();
    let k = rng.gen_range(1..=cfg.max_body.max(1));
    let forward = cfg.temporal && rng.gen_bool(cfg.forward);
    let (t, u) = (Term::tvar(TIME_VARS[0]), Term::tvar(TIME_VARS[1]));
    let mut body: Vec<LarsAtom> = if forward {
        vec![
            LarsAtom::At(t.clone(), base(rng, cfg, &all)),
            LarsAtom::Arith(ArithAtom::PlusEq(u.clone(), t, Term::Time(1))),
        ]
    } else {
        // The first atom reads the stream so that most rules can fire.
        (0..k)
            .map(|i| body_atom(rng, cfg, if i == 0 { &EXTENSIONAL[..] } else { &all }))
            .collect()
    };
    if body.iter().all(|a| matches!(a, LarsAtom::Arith(_))) {
        body.push(LarsAtom::Plain(base(rng, cfg, &all)));
    }
    let bound: Vec<Var> = body.iter().flat_map(|a| a.vars()).cloned().collect();
    let time_bound: Vec<&Var> = bound.iter().filter(|v| v.sort == crate::term::Sort::Time).collect();
    let mut existentials = Vec::new();
    let heads = rng.gen_range(1..=2);
    let mut head = Vec::new();
    for _ in 0..heads {
        let mut b = base(rng, cfg, &INTENSIONAL);
        if let BaseAtom::Atom(a) = &mut b {
            for t in &mut a.args {
                let fresh = cfg.existentials && rng.gen_bool(0.25);
                let Term::Var(v) = t else { continue };
                if bound.contains(v) && !fresh {
                    continue;
                }
                if fresh || (cfg.existentials && rng.gen_bool(0.7)) {
                    let w = Var::abs(format!("W{}", existentials.len()));
                    *t = Term::Var(w.clone());
                    existentials.push(w);
                } else {
                    *t = constant(rng, cfg);
                }
            }
        }
        let h = match (cfg.temporal, rng.gen_range(0..3)) {
            _ if forward => HeadAtom::At(u.clone(), b),
            (true, 0) if !time_bound.is_empty() => HeadAtom::At(Term::Var((*time_bound.choose(rng).unwrap()).clone()), b),
            (true, 1) => HeadAtom::At(Term::Time(rng.gen_range(0..=cfg.horizon)), b),
            _ => HeadAtom::Plain(b),
        };
        head.push(h);
    }
    Rule {
        id: format!("r{id}").into(),
        body,
        head,
        existentials,
    }
}

pub fn random_program(rng: &mut impl Rng, cfg: &FuzzConfig) -> Program {
    let n = rng.gen_range(1..=cfg.max_rules.max(1));
    let mut p = Program::from_rules((0..n).map(|i| random_rule(rng, cfg, i)).collect());
    for (name, n) in EXTENSIONAL.iter().chain(&INTENSIONAL) {
        p.signature
            .entry((*name).into())
            .or_insert_with(|| crate::lars::PredicateSig::simple(*name, *n));
    }
    p
}

pub fn random_stream(rng: &mut impl Rng, cfg: &FuzzConfig) -> Stream {
    let mut s = Stream::new(Timeline::new(cfg.horizon));
    for _ in 0..rng.gen_range(0..=cfg.max_facts) {
        let (p, n) = *EXTENSIONAL.choose(rng).unwrap();
        let a = NormalAtom::new(p, (0..n).map(|_| constant(rng, cfg)).collect());
        s.insert(rng.gen_range(0..=cfg.horizon), a);
    }
    s
}

/// A query of one or two atoms over all predicates, without arithmetic.
pub fn random_query(rng: &mut impl Rng, cfg: &FuzzConfig) -> Bcq {
    let all: Vec<_> = EXTENSIONAL.iter().chain(&INTENSIONAL).copied().collect();
    let atoms = (0..rng.gen_range(1..=2))
        .map(|_| loop {
            let a = body_atom(rng, cfg, &all);
            if !matches!(a, LarsAtom::Arith(_)) {
                break a;
            }
        })
        .collect();
    Bcq::new(atoms)
}
