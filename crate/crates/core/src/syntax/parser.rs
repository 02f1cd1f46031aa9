use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind, SourceSpan};
use crate::lars::{ArithAtom, BaseAtom, Bcq, HeadAtom, LarsAtom, NormalAtom, Program, Rule, Stream, Timeline};
use crate::rewrite::{is_reserved_predicate, ExAtom, ExRule, ExRuleSet, FactSet, AT_PREFIX, BOX_PREFIX, LEQ, PLUS_EQ};
use crate::term::{Name, Sort, Term, TimePoint, Var};

const KEYWORDS: &[&str] = &["in", "always", "some", "at", "exists", "top", "timeline"];

/// A parsed `.exr` file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExProgram {
    pub rules: ExRuleSet,
    pub facts: FactSet,
}

#[derive(Clone, Debug)]
enum RawTermKind {
    Var(String),
    Ident(String),
    Num(String),
}

#[derive(Clone, Debug)]
struct RawTerm {
    kind: RawTermKind,
    span: SourceSpan,
}

#[derive(Clone, Debug)]
enum RawBase {
    Top,
    Atom { pred: String, args: Vec<RawTerm>, span: SourceSpan },
}

#[derive(Clone, Copy, Debug)]
enum WinKind {
    Always,
    Some,
}

#[derive(Clone, Debug)]
enum RawAtom {
    Leq(RawTerm, RawTerm),
    PlusEq(RawTerm, RawTerm, RawTerm),
    Plain(RawBase),
    At(RawTerm, RawBase),
    Win(u32, WinKind, RawBase),
    WinAt(u32, RawTerm, RawBase),
}

struct RawRule {
    label: Option<(String, SourceSpan)>,
    span: SourceSpan,
    body: Vec<RawAtom>,
    exists: Vec<(String, SourceSpan)>,
    head: Vec<RawAtom>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Lars,
    Exr,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode,
}

fn err(kind: ParseErrorKind, span: SourceSpan, msg: impl Into<String>) -> ParseError {
    ParseError::new(kind, span, msg)
}

impl Parser {
    fn new(text: &str, mode: Mode) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            mode,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        err(
            ParseErrorKind::Syntactic,
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<SourceSpan, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        self.mode == Mode::Lars && matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Num(s) => {
                let span = self.bump().span;
                s.parse()
                    .map_err(|_| err(ParseErrorKind::Lexical, span, format!("number '{s}' is out of range")))
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Var(s) => RawTermKind::Var(s),
            Tok::Ident(s) => RawTermKind::Ident(s),
            Tok::Num(s) => RawTermKind::Num(s),
            _ => return Err(self.unexpected("a term")),
        };
        self.bump();
        Ok(RawTerm { kind, span })
    }

    fn time_term(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Tok::Var(_) | Tok::Num(_) => self.term(),
            _ => Err(self.unexpected("a time variable or time point")),
        }
    }

    fn base(&mut self) -> Result<RawBase, ParseError> {
        if self.eat_keyword("top") {
            return Ok(RawBase::Top);
        }
        let span = self.span();
        let pred = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return Err(self.unexpected("an atom")),
        };
        if self.mode == Mode::Lars && KEYWORDS.contains(&pred.as_str()) {
            return Err(err(
                ParseErrorKind::Syntactic,
                span,
                format!("'{pred}' is a keyword and cannot be used as a predicate"),
            ));
        }
        self.bump();
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(RawBase::Atom { pred, args, span })
    }

    fn at_prefix(&mut self) -> bool {
        if *self.peek() == Tok::At {
            self.bump();
            true
        } else {
            self.eat_keyword("at")
        }
    }

    fn body_atom(&mut self) -> Result<RawAtom, ParseError> {
        if matches!(self.peek(), Tok::Var(_) | Tok::Num(_)) {
            let a = self.term()?;
            return match self.peek() {
                Tok::Leq => {
                    self.bump();
                    Ok(RawAtom::Leq(a, self.term()?))
                }
                Tok::Eq => {
                    self.bump();
                    let b = self.term()?;
                    self.expect(Tok::Plus)?;
                    Ok(RawAtom::PlusEq(a, b, self.term()?))
                }
                _ => Err(self.unexpected("'<=' or '='")),
            };
        }
        if self.mode == Mode::Exr {
            return Ok(RawAtom::Plain(self.base()?));
        }
        if self.eat_keyword("in") {
            let n = self.number()?;
            if self.eat_keyword("always") {
                return Ok(RawAtom::Win(n, WinKind::Always, self.base()?));
            }
            if self.eat_keyword("some") {
                return Ok(RawAtom::Win(n, WinKind::Some, self.base()?));
            }
            if self.at_prefix() {
                let t = self.time_term()?;
                return Ok(RawAtom::WinAt(n, t, self.base()?));
            }
            return Err(self.unexpected("'always', 'some' or 'at'"));
        }
        if self.at_prefix() {
            let t = self.time_term()?;
            return Ok(RawAtom::At(t, self.base()?));
        }
        Ok(RawAtom::Plain(self.base()?))
    }

    fn head_atom(&mut self) -> Result<RawAtom, ParseError> {
        if self.mode == Mode::Lars {
            if self.is_keyword("in") {
                return Err(err(
                    ParseErrorKind::HeadWindow,
                    self.span(),
                    "windows cannot occur in rule heads",
                ));
            }
            if self.at_prefix() {
                let t = self.time_term()?;
                return Ok(RawAtom::At(t, self.base()?));
            }
        }
        if matches!(self.peek(), Tok::Var(_) | Tok::Num(_)) {
            return Err(self.unexpected("an atom (arithmetic cannot occur in rule heads)"));
        }
        Ok(RawAtom::Plain(self.base()?))
    }

    fn conjunction(&mut self, head: bool) -> Result<Vec<RawAtom>, ParseError> {
        let mut out = vec![if head { self.head_atom()? } else { self.body_atom()? }];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(if head { self.head_atom()? } else { self.body_atom()? });
        }
        Ok(out)
    }

    fn var_list(&mut self) -> Result<Vec<(String, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) => out.push((v, self.bump().span)),
                _ => return Err(self.unexpected("a variable")),
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn label(&mut self) -> Option<(String, SourceSpan)> {
        if let (Tok::Ident(s), Tok::Colon) = (self.peek().clone(), self.peek2()) {
            let span = self.bump().span;
            self.bump();
            return Some((s, span));
        }
        None
    }

    /// `[label:] body -> [exists V⃗.] head .`; in `.exr` files a statement
    /// without an arrow is a fact.
    fn statement(&mut self) -> Result<RawRule, ParseError> {
        let span = self.span();
        let label = self.label();
        if *self.peek() == Tok::Arrow {
            return Err(err(
                ParseErrorKind::Syntactic,
                self.span(),
                "rules need a nonempty body; ground data belongs in the stream",
            ));
        }
        let body = self.conjunction(false)?;
        if self.mode == Mode::Exr && label.is_none() && *self.peek() == Tok::Dot {
            self.bump();
            return Ok(RawRule {
                label,
                span,
                body: Vec::new(),
                exists: Vec::new(),
                head: body,
            });
        }
        self.expect(Tok::Arrow)?;
        let mut exists = Vec::new();
        if matches!(self.peek(), Tok::Ident(s) if s == "exists") {
            self.bump();
            exists = self.var_list()?;
            self.expect(Tok::Dot)?;
        }
        let head = self.conjunction(true)?;
        self.expect(Tok::Dot)?;
        Ok(RawRule {
            label,
            span,
            body,
            exists,
            head,
        })
    }
}

/// Per-statement variable sorts.
#[derive(Default)]
struct Scope {
    sorts: BTreeMap<String, Sort>,
}

impl Scope {
    fn declare(&mut self, v: &str, sort: Sort, span: SourceSpan) -> Result<(), ParseError> {
        match self.sorts.get(v) {
            Some(&s) if s != sort => Err(err(
                ParseErrorKind::SortConflict,
                span,
                format!("variable {v} is used with both {s} and {sort} sort"),
            )),
            _ => {
                self.sorts.insert(v.to_string(), sort);
                Ok(())
            }
        }
    }
}

fn base_sorts(pred: &str, arity: usize, mode: Mode) -> Vec<Sort> {
    let time_tail = match mode {
        Mode::Lars => 0,
        Mode::Exr if pred == LEQ || pred == PLUS_EQ => arity,
        Mode::Exr if pred.starts_with(BOX_PREFIX) => 2,
        Mode::Exr if pred.starts_with(AT_PREFIX) => 3,
        Mode::Exr => 0,
    };
    let time_tail = time_tail.min(arity);
    let mut s = vec![Sort::Abstract; arity - time_tail];
    s.extend(vec![Sort::Time; time_tail]);
    s
}

fn collect_term(scope: &mut Scope, t: &RawTerm, sort: Sort) -> Result<(), ParseError> {
    match &t.kind {
        RawTermKind::Var(v) => scope.declare(v, sort, t.span),
        RawTermKind::Ident(c) if sort == Sort::Time => Err(err(
            ParseErrorKind::SortConflict,
            t.span,
            format!("constant '{c}' in a time position"),
        )),
        _ => Ok(()),
    }
}

fn collect_base(scope: &mut Scope, b: &RawBase, mode: Mode) -> Result<(), ParseError> {
    if let RawBase::Atom { pred, args, .. } = b {
        for (t, s) in args.iter().zip(base_sorts(pred, args.len(), mode)) {
            collect_term(scope, t, s)?;
        }
    }
    Ok(())
}

fn collect_atom(scope: &mut Scope, a: &RawAtom, mode: Mode) -> Result<(), ParseError> {
    match a {
        RawAtom::Leq(x, y) => {
            collect_term(scope, x, Sort::Time)?;
            collect_term(scope, y, Sort::Time)
        }
        RawAtom::PlusEq(x, y, z) => {
            collect_term(scope, x, Sort::Time)?;
            collect_term(scope, y, Sort::Time)?;
            collect_term(scope, z, Sort::Time)
        }
        RawAtom::Plain(b) | RawAtom::Win(_, _, b) => collect_base(scope, b, mode),
        RawAtom::At(t, b) | RawAtom::WinAt(_, t, b) => {
            collect_term(scope, t, Sort::Time)?;
            collect_base(scope, b, mode)
        }
    }
}

fn build_term(t: &RawTerm, sort: Sort) -> Result<Term, ParseError> {
    Ok(match (&t.kind, sort) {
        (RawTermKind::Var(v), s) => Term::Var(Var::new(v.as_str(), s)),
        (RawTermKind::Ident(c), Sort::Abstract) | (RawTermKind::Num(c), Sort::Abstract) => Term::constant(c.as_str()),
        (RawTermKind::Num(n), Sort::Time) => Term::Time(n.parse().map_err(|_| {
            err(ParseErrorKind::Lexical, t.span, format!("time point '{n}' is out of range"))
        })?),
        (RawTermKind::Ident(c), Sort::Time) => {
            return Err(err(
                ParseErrorKind::SortConflict,
                t.span,
                format!("constant '{c}' in a time position"),
            ))
        }
    })
}

/// Tracks predicate arities across a whole input.
#[derive(Default)]
struct Arities(BTreeMap<String, usize>);

impl Arities {
    fn check(&mut self, pred: &str, arity: usize, span: SourceSpan) -> Result<(), ParseError> {
        match self.0.get(pred) {
            Some(&a) if a != arity => Err(err(
                ParseErrorKind::ArityConflict,
                span,
                format!("predicate {pred} is used with arity {a} and {arity}"),
            )),
            _ => {
                self.0.insert(pred.to_string(), arity);
                Ok(())
            }
        }
    }
}

fn build_normal(pred: &str, args: &[RawTerm], mode: Mode) -> Result<NormalAtom, ParseError> {
    let args = args
        .iter()
        .zip(base_sorts(pred, args.len(), mode))
        .map(|(t, s)| build_term(t, s))
        .collect::<Result<_, _>>()?;
    Ok(NormalAtom::new(pred, args))
}

fn build_base(b: &RawBase, arities: &mut Arities, mode: Mode) -> Result<BaseAtom, ParseError> {
    match b {
        RawBase::Top => Ok(BaseAtom::Top),
        RawBase::Atom { pred, args, span } => {
            if mode == Mode::Lars && is_reserved_predicate(pred) {
                return Err(err(
                    ParseErrorKind::Syntactic,
                    *span,
                    format!("predicate name '{pred}' is reserved"),
                ));
            }
            arities.check(pred, args.len(), *span)?;
            Ok(BaseAtom::Atom(build_normal(pred, args, mode)?))
        }
    }
}

fn build_lars_atom(a: &RawAtom, arities: &mut Arities) -> Result<LarsAtom, ParseError> {
    let tt = |t: &RawTerm| build_term(t, Sort::Time);
    Ok(match a {
        RawAtom::Leq(x, y) => LarsAtom::Arith(ArithAtom::Leq(tt(x)?, tt(y)?)),
        RawAtom::PlusEq(x, y, z) => LarsAtom::Arith(ArithAtom::PlusEq(tt(x)?, tt(y)?, tt(z)?)),
        RawAtom::Plain(b) => LarsAtom::Plain(build_base(b, arities, Mode::Lars)?),
        RawAtom::At(t, b) => LarsAtom::At(tt(t)?, build_base(b, arities, Mode::Lars)?),
        RawAtom::Win(n, WinKind::Always, b) => LarsAtom::WinBox(*n, build_base(b, arities, Mode::Lars)?),
        RawAtom::Win(n, WinKind::Some, b) => LarsAtom::WinDiamond(*n, build_base(b, arities, Mode::Lars)?),
        RawAtom::WinAt(n, t, b) => LarsAtom::WinAt(*n, tt(t)?, build_base(b, arities, Mode::Lars)?),
    })
}

fn raw_vars(atoms: &[RawAtom]) -> Vec<(String, SourceSpan)> {
    let mut out = Vec::new();
    let mut push = |t: &RawTerm| {
        if let RawTermKind::Var(v) = &t.kind {
            out.push((v.clone(), t.span));
        }
    };
    for a in atoms {
        match a {
            RawAtom::Leq(x, y) => {
                push(x);
                push(y);
            }
            RawAtom::PlusEq(x, y, z) => {
                push(x);
                push(y);
                push(z);
            }
            RawAtom::Plain(b) | RawAtom::Win(_, _, b) | RawAtom::At(_, b) | RawAtom::WinAt(_, _, b) => {
                if let RawAtom::At(t, _) | RawAtom::WinAt(_, t, _) = a {
                    push(t);
                }
                if let RawBase::Atom { args, .. } = b {
                    args.iter().for_each(&mut push);
                }
            }
        }
    }
    out
}

/// Checks the existential declaration and returns the existential variables
/// (head variables absent from the body, in order of first occurrence).
fn existentials(raw: &RawRule, scope: &Scope) -> Result<Vec<Var>, ParseError> {
    let body: BTreeSet<String> = raw_vars(&raw.body).into_iter().map(|(v, _)| v).collect();
    let head = raw_vars(&raw.head);
    for (v, span) in &raw.exists {
        if body.contains(v) {
            return Err(err(
                ParseErrorKind::Syntactic,
                *span,
                format!("existential variable {v} occurs in the body"),
            ));
        }
        if !head.iter().any(|(h, _)| h == v) {
            return Err(err(
                ParseErrorKind::Syntactic,
                *span,
                format!("existential variable {v} does not occur in the head"),
            ));
        }
    }
    let mut out: Vec<Var> = Vec::new();
    for (v, span) in head {
        if body.contains(&v) || out.iter().any(|o| *o.name == *v) {
            continue;
        }
        let sort = scope.sorts[&v];
        if sort == Sort::Time {
            return Err(err(
                ParseErrorKind::Syntactic,
                span,
                format!("time variable {v} in the head must occur in the body"),
            ));
        }
        out.push(Var::new(v.as_str(), sort));
    }
    Ok(out)
}

fn assign_ids(labels: Vec<Option<(String, SourceSpan)>>) -> Result<Vec<Name>, ParseError> {
    let mut taken = BTreeSet::new();
    for (l, span) in labels.iter().flatten() {
        if !taken.insert(l.clone()) {
            return Err(err(ParseErrorKind::Syntactic, *span, format!("duplicate rule label '{l}'")));
        }
    }
    let mut out = Vec::with_capacity(labels.len());
    for (i, l) in labels.into_iter().enumerate() {
        let id = match l {
            Some((l, _)) => l,
            None => {
                let mut id = format!("r{}", i + 1);
                let mut k = 0;
                while taken.contains(&id) {
                    k += 1;
                    id = format!("r{}_{k}", i + 1);
                }
                taken.insert(id.clone());
                id
            }
        };
        out.push(Name::from(id));
    }
    Ok(out)
}

fn parse_raw_statements(p: &mut Parser) -> Result<Vec<RawRule>, ParseError> {
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Parses a `.lars` program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text, Mode::Lars)?;
    let raws = parse_raw_statements(&mut p)?;
    let mut arities = Arities::default();
    let mut rules = Vec::with_capacity(raws.len());
    let mut labels = Vec::with_capacity(raws.len());
    for raw in &raws {
        let mut scope = Scope::default();
        for a in raw.body.iter().chain(&raw.head) {
            collect_atom(&mut scope, a, Mode::Lars)?;
        }
        let existentials = existentials(raw, &scope)?;
        let body = raw
            .body
            .iter()
            .map(|a| build_lars_atom(a, &mut arities))
            .collect::<Result<Vec<_>, _>>()?;
        let head = raw
            .head
            .iter()
            .map(|a| {
                Ok(match build_lars_atom(a, &mut arities)? {
                    LarsAtom::Plain(b) => HeadAtom::Plain(b),
                    LarsAtom::At(t, b) => HeadAtom::At(t, b),
                    _ => return Err(err(ParseErrorKind::HeadWindow, raw.span, "windows cannot occur in rule heads")),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        labels.push(raw.label.clone());
        rules.push(Rule {
            id: Name::from(""),
            body,
            head,
            existentials,
        });
    }
    for (r, id) in rules.iter_mut().zip(assign_ids(labels)?) {
        r.id = id;
    }
    Ok(Program::from_rules(rules))
}

/// Parses a query: `[exists X⃗.] atom, …, atom [.]`.
pub fn parse_query(text: &str) -> Result<Bcq, ParseError> {
    let mut p = Parser::new(text, Mode::Lars)?;
    if p.eat_keyword("exists") {
        p.var_list()?;
        p.expect(Tok::Dot)?;
    }
    let raw = p.conjunction(false)?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.unexpected("end of query"));
    }
    let mut scope = Scope::default();
    for a in &raw {
        collect_atom(&mut scope, a, Mode::Lars)?;
    }
    let mut arities = Arities::default();
    let atoms = raw
        .iter()
        .map(|a| build_lars_atom(a, &mut arities))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Bcq::new(atoms))
}

/// Parses a `.lstream` file: `timeline 0 h.` followed by `@t fact.` lines.
pub fn parse_stream(text: &str) -> Result<Stream, ParseError> {
    let mut p = Parser::new(text, Mode::Lars)?;
    if !p.is_keyword("timeline") {
        return Err(err(
            ParseErrorKind::Syntactic,
            p.span(),
            "a stream starts with a 'timeline L H.' header",
        ));
    }
    p.bump();
    let lo_span = p.span();
    let lo = p.number()?;
    let hi = p.number()?;
    p.expect(Tok::Dot)?;
    if lo != 0 {
        return Err(err(ParseErrorKind::Syntactic, lo_span, "timelines start at 0"));
    }
    let mut stream = Stream::new(Timeline::new(hi));
    let mut arities = Arities::default();
    while !p.at_eof() {
        if p.is_keyword("timeline") {
            return Err(err(ParseErrorKind::Syntactic, p.span(), "duplicate timeline header"));
        }
        if !p.at_prefix() {
            return Err(p.unexpected("'@t fact.'"));
        }
        let t_span = p.span();
        let t: TimePoint = p.number()?;
        let base = p.base()?;
        p.expect(Tok::Dot)?;
        let args = match &base {
            RawBase::Top => return Err(err(ParseErrorKind::Syntactic, t_span, "'top' cannot be a stream fact")),
            RawBase::Atom { args, .. } => args,
        };
        if let Some(v) = args.iter().find(|a| matches!(a.kind, RawTermKind::Var(_))) {
            return Err(err(ParseErrorKind::Syntactic, v.span, "stream facts must be ground"));
        }
        let atom = match build_base(&base, &mut arities, Mode::Lars)? {
            BaseAtom::Atom(a) => a,
            BaseAtom::Top => unreachable!(),
        };
        if !stream.timeline.contains(t) {
            return Err(err(
                ParseErrorKind::Syntactic,
                t_span,
                format!("time point {t} is outside the timeline {}", stream.timeline),
            ));
        }
        stream.insert(t, atom);
    }
    Ok(stream)
}

/// Parses a `.exr` file of existential rules and ground facts.
pub fn parse_exrules(text: &str) -> Result<ExProgram, ParseError> {
    let mut p = Parser::new(text, Mode::Exr)?;
    let raws = parse_raw_statements(&mut p)?;
    let mut arities = Arities::default();
    let mut out = ExProgram::default();
    let mut labels = Vec::new();
    let mut rules = Vec::new();
    for raw in &raws {
        let mut scope = Scope::default();
        for a in raw.body.iter().chain(&raw.head) {
            collect_atom(&mut scope, a, Mode::Exr)?;
        }
        let normal = |a: &RawAtom, arities: &mut Arities| -> Result<NormalAtom, ParseError> {
            match a {
                RawAtom::Plain(RawBase::Atom { pred, args, span }) => {
                    arities.check(pred, args.len(), *span)?;
                    build_normal(pred, args, Mode::Exr)
                }
                _ => Err(err(ParseErrorKind::Syntactic, raw.span, "expected a normal atom")),
            }
        };
        if raw.body.is_empty() {
            for a in &raw.head {
                let f = normal(a, &mut arities)?;
                if !f.is_ground() {
                    return Err(err(ParseErrorKind::Syntactic, raw.span, "facts must be ground"));
                }
                out.facts.insert(f);
            }
            continue;
        }
        let existentials = existentials(raw, &scope)?;
        let tt = |t: &RawTerm| build_term(t, Sort::Time);
        let body = raw
            .body
            .iter()
            .map(|a| {
                Ok(match a {
                    RawAtom::Leq(x, y) => ExAtom::Arith(ArithAtom::Leq(tt(x)?, tt(y)?)),
                    RawAtom::PlusEq(x, y, z) => ExAtom::Arith(ArithAtom::PlusEq(tt(x)?, tt(y)?, tt(z)?)),
                    _ => ExAtom::Normal(normal(a, &mut arities)?),
                })
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        let head = raw
            .head
            .iter()
            .map(|a| normal(a, &mut arities))
            .collect::<Result<Vec<_>, _>>()?;
        labels.push(raw.label.clone());
        rules.push(ExRule::new("", body, head, existentials));
    }
    for (r, id) in rules.iter_mut().zip(assign_ids(labels)?) {
        r.origin = id.clone();
        r.id = id;
    }
    out.rules = rules;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(r: Result<impl std::fmt::Debug, ParseError>) -> ParseErrorKind {
        r.unwrap_err().kind
    }

    #[test]
    fn warning_rule() {
        let p = parse_program("in 3 always bTmp(X,Y), high(Y) -> warn(X).").unwrap();
        let r = &p.rules[0];
        assert_eq!(&*r.id, "r1");
        assert_eq!(
            r.body[0],
            LarsAtom::WinBox(
                3,
                BaseAtom::Atom(NormalAtom::new("bTmp", vec![Term::avar("X"), Term::avar("Y")]))
            )
        );
        assert!(r.existentials.is_empty());
        assert_eq!(p.signature.len(), 3);
    }

    #[test]
    fn existentials_inferred_or_declared() {
        let a = parse_program("belt(X) -> exists Y. bOpr(X,Y).").unwrap();
        let b = parse_program("belt(X) -> bOpr(X,Y).").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rules[0].existentials, vec![Var::abs("Y")]);
        assert_eq!(kind(parse_program("p(X) -> exists X. q(X).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_program("p(X) -> @T q(X).")), ParseErrorKind::Syntactic);
    }

    #[test]
    fn temporal_rule() {
        let p = parse_program("@T q(X,Y), U = T + 1 -> @U p(Y).").unwrap();
        let r = &p.rules[0];
        assert_eq!(
            r.body[1],
            LarsAtom::Arith(ArithAtom::PlusEq(Term::tvar("U"), Term::tvar("T"), Term::Time(1)))
        );
        assert_eq!(
            r.head[0],
            HeadAtom::At(Term::tvar("U"), BaseAtom::Atom(NormalAtom::new("p", vec![Term::avar("Y")])))
        );
    }

    #[test]
    fn all_atom_forms() {
        let p = parse_program(
            "lbl: in 2 some a(X), in 4 at T b(X), at T c, @3 d(X), top, T <= 5 -> e(X), @T f, at 0 g.",
        )
        .unwrap();
        let r = &p.rules[0];
        assert_eq!(&*r.id, "lbl");
        assert!(matches!(r.body[0], LarsAtom::WinDiamond(2, _)));
        assert!(matches!(r.body[1], LarsAtom::WinAt(4, Term::Var(_), _)));
        assert!(matches!(r.body[2], LarsAtom::At(Term::Var(_), _)));
        assert!(matches!(r.body[3], LarsAtom::At(Term::Time(3), _)));
        assert_eq!(r.body[4], LarsAtom::Plain(BaseAtom::Top));
        assert_eq!(r.head.len(), 3);
    }

    #[test]
    fn program_errors() {
        assert_eq!(kind(parse_program("p(X) -> in 3 always q(X).")), ParseErrorKind::HeadWindow);
        assert_eq!(kind(parse_program("p(_:n) -> q.")), ParseErrorKind::NullInSource);
        assert_eq!(kind(parse_program("p(X) -> q(X). p(X,Y) -> q(X).")), ParseErrorKind::ArityConflict);
        assert_eq!(kind(parse_program("p(X), X <= 3 -> q(X).")), ParseErrorKind::SortConflict);
        assert_eq!(kind(parse_program("-> p(a).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_program("p(X) -> box_q(X).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_program("a: p -> q. a: p -> r.")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_program("@a p -> q.")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_program("p -> q")), ParseErrorKind::Syntactic);
        assert!(parse_program("").unwrap().rules.is_empty());
        assert!(parse_program("% only a comment\n").unwrap().rules.is_empty());
    }

    #[test]
    fn auto_ids_skip_labels() {
        let p = parse_program("r2: p -> q. p -> r.").unwrap();
        assert_eq!(&*p.rules[0].id, "r2");
        assert_eq!(&*p.rules[1].id, "r2_1");
    }

    #[test]
    fn streams() {
        let s = parse_stream("timeline 0 1.\n@0 p(a).").unwrap();
        assert_eq!(s.timeline, Timeline::new(1));
        assert!(s.contains(0, &NormalAtom::new("p", vec![Term::constant("a")])));
        assert_eq!(s.len(), 1);
        let s = parse_stream("timeline 0 3. @2 bTmp(b1, 90). at 3 q.").unwrap();
        assert!(s.contains(2, &NormalAtom::new("bTmp", vec![Term::constant("b1"), Term::constant("90")])));
        assert_eq!(kind(parse_stream("timeline 0 1.\n@5 p(a).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_stream("@0 p(a).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_stream("timeline 1 3.")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_stream("timeline 0 3. @0 p(X).")), ParseErrorKind::Syntactic);
        assert_eq!(kind(parse_stream("timeline 0 3. @0 p(a). @1 p(a,b).")), ParseErrorKind::ArityConflict);
    }

    #[test]
    fn queries() {
        let q = parse_query("exists X. in 5 some warn(X)").unwrap();
        assert_eq!(q.exists, vec![Var::abs("X")]);
        let q = parse_query("warn(b1).").unwrap();
        assert!(q.exists.is_empty());
        assert_eq!(kind(parse_query("exists X,Y. q(X,Y), X <= Y")), ParseErrorKind::SortConflict);
        let q = parse_query("T <= 3").unwrap();
        assert_eq!(q.exists, vec![Var::time("T")]);
        assert_eq!(kind(parse_query("warn(")), ParseErrorKind::Syntactic);
    }

    #[test]
    fn exrules() {
        let e = parse_exrules(
            "box_p(X,0,C), leq(C,3), C1 = C + 1 -> exists Z. box_q(X,Z,0,C1).\nbox_p(a,0,2).\nleq(0,1).",
        )
        .unwrap();
        assert_eq!(e.rules.len(), 1);
        assert_eq!(e.facts.len(), 2);
        let r = &e.rules[0];
        assert_eq!(r.existentials, vec![Var::abs("Z")]);
        assert_eq!(
            r.body[0],
            ExAtom::Normal(NormalAtom::new("box_p", vec![Term::avar("X"), Term::Time(0), Term::tvar("C")]))
        );
        assert!(e.facts.contains(&NormalAtom::new("leq", vec![Term::Time(0), Term::Time(1)])));
        assert!(e.facts.contains(&NormalAtom::new("box_p", vec![Term::constant("a"), Term::Time(0), Term::Time(2)])));
        assert_eq!(kind(parse_exrules("box_p(X,0,C) -> q(C).")), ParseErrorKind::SortConflict);
        assert_eq!(kind(parse_exrules("p(X).")), ParseErrorKind::Syntactic);
    }
}
