use std::fmt::{self, Write};

use super::ExProgram;
use crate::lars::{ArithAtom, BaseAtom, Bcq, HeadAtom, LarsAtom, Program, Rule, Stream};
use crate::rewrite::{ExAtom, ExRule};

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

fn write_exists(f: &mut fmt::Formatter<'_>, vars: &[crate::term::Var]) -> fmt::Result {
    if vars.is_empty() {
        return Ok(());
    }
    f.write_str("exists ")?;
    join(f, vars)?;
    f.write_str(". ")
}

impl fmt::Display for ArithAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithAtom::Leq(a, b) => write!(f, "{a} <= {b}"),
            ArithAtom::PlusEq(a, b, c) => write!(f, "{a} = {b} + {c}"),
        }
    }
}

impl fmt::Display for BaseAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseAtom::Top => f.write_str("top"),
            BaseAtom::Atom(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for LarsAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LarsAtom::Arith(a) => write!(f, "{a}"),
            LarsAtom::Plain(b) => write!(f, "{b}"),
            LarsAtom::At(t, b) => write!(f, "@{t} {b}"),
            LarsAtom::WinAt(n, t, b) => write!(f, "in {n} at {t} {b}"),
            LarsAtom::WinDiamond(n, b) => write!(f, "in {n} some {b}"),
            LarsAtom::WinBox(n, b) => write!(f, "in {n} always {b}"),
        }
    }
}

impl fmt::Display for HeadAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadAtom::Plain(b) => write!(f, "{b}"),
            HeadAtom::At(t, b) => write!(f, "@{t} {b}"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.id)?;
        join(f, &self.body)?;
        f.write_str(" -> ")?;
        write_exists(f, &self.existentials)?;
        join(f, &self.head)?;
        f.write_str(".")
    }
}

impl fmt::Display for ExAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExAtom::Normal(a) => write!(f, "{a}"),
            ExAtom::Arith(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for ExRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.id)?;
        join(f, &self.body)?;
        f.write_str(" -> ")?;
        write_exists(f, &self.existentials)?;
        join(f, &self.head)?;
        f.write_str(".")
    }
}

fn lines<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for x in items {
        writeln!(out, "{x}").unwrap();
    }
    out
}

/// One rule per line; the empty program renders as the empty string.
pub fn render_program(p: &Program) -> String {
    lines(&p.rules)
}

pub fn render_query(q: &Bcq) -> String {
    q.atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn render_stream(s: &Stream) -> String {
    let mut out = format!("timeline 0 {}.\n", s.timeline.horizon);
    for (t, a) in s.iter() {
        writeln!(out, "@{t} {a}.").unwrap();
    }
    out
}

pub fn render_exrules(rules: &[ExRule]) -> String {
    lines(rules)
}

/// Rules followed by facts; facts are sorted so the output is deterministic.
pub fn render_exprogram(p: &ExProgram) -> String {
    let mut facts: Vec<String> = p.facts.iter().map(|a| format!("{a}.")).collect();
    facts.sort();
    let mut out = render_exrules(&p.rules);
    out.push_str(&lines(facts));
    out
}
