//! Weak acyclicity and its two LARS⁺ liftings: on the stripped program (LWA)
//! and on the time-free temporal grounding (TLWA).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use thiserror::Error;

use crate::chase::{homomorphisms, FactIndex};
use crate::lars::{ArithAtom, BaseAtom, HeadAtom, LarsAtom, NormalAtom, Program, Rule, Timeline, TOP};
use crate::rewrite::{box_name, rewrite_rule, ExAtom, ExRule, ExRuleSet, FactSet, FreshVars, AT_PREFIX, BOX_PREFIX, LEQ, PLUS_EQ};
use crate::term::{Name, Sort, Term, Var};

/// Predicate position `⟨p, i⟩`, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Position {
    pub predicate: Name,
    pub index: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.predicate, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: Position,
    pub to: Position,
    pub special: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<Position>,
    pub normal_edges: BTreeSet<(Position, Position)>,
    pub special_edges: BTreeSet<(Position, Position)>,
}

impl DependencyGraph {
    pub fn has_edge(&self, e: &Edge) -> bool {
        let pair = (e.from.clone(), e.to.clone());
        if e.special {
            self.special_edges.contains(&pair)
        } else {
            self.normal_edges.contains(&pair)
        }
    }

    /// Whether `cycle` is a closed walk of graph edges with a special edge.
    pub fn validates(&self, cycle: &[Edge]) -> bool {
        !cycle.is_empty()
            && cycle.iter().any(|e| e.special)
            && cycle.iter().all(|e| self.has_edge(e))
            && cycle.windows(2).all(|w| w[0].to == w[1].from)
            && cycle.last().unwrap().to == cycle[0].from
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WaVerdict {
    pub acyclic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Edge>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AcyclicityError {
    #[error("predicate {0} of the grounding set occurs in a rule head")]
    GroundingPredicateInHead(Name),
    #[error("atom {0} has a non-ground time argument")]
    NonGroundTime(NormalAtom),
    #[error("atom {0} has a nonzero window argument")]
    NonzeroWindow(NormalAtom),
    #[error("atom {0} cannot be made time-free")]
    NotTimeFreeable(String),
}

fn top_atom() -> NormalAtom {
    NormalAtom::new(TOP, vec![])
}

/// Drops arithmetic, windows and temporal operators; `⊤` stands for an
/// empty body.
pub fn strip(p: &Program) -> ExRuleSet {
    p.rules
        .iter()
        .map(|r| {
            let mut body: Vec<ExAtom> = r
                .body
                .iter()
                .filter_map(LarsAtom::base)
                .map(|b| ExAtom::Normal(b.to_normal()))
                .collect();
            if body.is_empty() {
                body.push(ExAtom::Normal(top_atom()));
            }
            let head = r.head.iter().map(|h| h.base().to_normal()).collect();
            ExRule::new(r.id.clone(), body, head, r.existentials.clone())
        })
        .collect()
}

fn positions_of<'a>(atoms: impl IntoIterator<Item = &'a NormalAtom>, v: &Var) -> Vec<Position> {
    let mut out = Vec::new();
    for a in atoms {
        for (i, t) in a.args.iter().enumerate() {
            if t.as_var() == Some(v) {
                out.push(Position {
                    predicate: a.pred.clone(),
                    index: i + 1,
                });
            }
        }
    }
    out
}

/// Dependency graph of the single-sorted reading of `rules` (arithmetic atoms
/// count as `leq`/`plusEq` atoms).
pub fn dependency_graph(rules: &[ExRule]) -> DependencyGraph {
    let mut g = DependencyGraph::default();
    for r in rules {
        let body: Vec<NormalAtom> = r.body.iter().map(ExAtom::to_normal).collect();
        for a in body.iter().chain(&r.head) {
            for i in 1..=a.arity() {
                g.nodes.insert(Position {
                    predicate: a.pred.clone(),
                    index: i,
                });
            }
        }
        let body_vars = r.body_vars();
        let exist_pos: Vec<Position> = r.existentials.iter().flat_map(|z| positions_of(&r.head, z)).collect();
        for y in r.frontier().iter().filter(|y| body_vars.contains(*y)) {
            let head_pos = positions_of(&r.head, y);
            for pi in positions_of(&body, y) {
                for h in &head_pos {
                    g.normal_edges.insert((pi.clone(), h.clone()));
                }
                for z in &exist_pos {
                    g.special_edges.insert((pi.clone(), z.clone()));
                }
            }
        }
    }
    g
}

/// Weakly acyclic iff no special edge lies inside a strongly connected
/// component; otherwise a cycle through such an edge is returned.
pub fn is_weakly_acyclic(rules: &[ExRule]) -> WaVerdict {
    verdict_for(&dependency_graph(rules))
}

pub fn verdict_for(g: &DependencyGraph) -> WaVerdict {
    let mut graph: DiGraph<Position, bool> = DiGraph::new();
    let mut ids: HashMap<&Position, NodeIndex> = HashMap::new();
    for n in &g.nodes {
        ids.insert(n, graph.add_node(n.clone()));
    }
    for (a, b) in &g.normal_edges {
        graph.add_edge(ids[a], ids[b], false);
    }
    for (a, b) in &g.special_edges {
        graph.add_edge(ids[a], ids[b], true);
    }
    let mut comp = vec![usize::MAX; graph.node_count()];
    for (k, scc) in tarjan_scc(&graph).into_iter().enumerate() {
        for n in scc {
            comp[n.index()] = k;
        }
    }
    for (a, b) in &g.special_edges {
        let (u, v) = (ids[a], ids[b]);
        if comp[u.index()] != comp[v.index()] {
            continue;
        }
        let mut cycle = vec![Edge {
            from: a.clone(),
            to: b.clone(),
            special: true,
        }];
        cycle.extend(path_within(&graph, &comp, v, u));
        return WaVerdict {
            acyclic: false,
            witness: Some(cycle),
        };
    }
    WaVerdict {
        acyclic: true,
        witness: None,
    }
}

/// Shortest path from `from` to `to` inside their component (BFS).
fn path_within(graph: &DiGraph<Position, bool>, comp: &[usize], from: NodeIndex, to: NodeIndex) -> Vec<Edge> {
    if from == to {
        return Vec::new();
    }
    let c = comp[from.index()];
    let mut prev: HashMap<NodeIndex, (NodeIndex, bool)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        for e in graph.edges(n) {
            use petgraph::visit::EdgeRef;
            let m = e.target();
            if comp[m.index()] == c && m != from && !prev.contains_key(&m) {
                prev.insert(m, (n, *e.weight()));
                queue.push_back(m);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, special) = prev[&cur];
        path.push(Edge {
            from: graph[p].clone(),
            to: graph[cur].clone(),
            special,
        });
        cur = p;
    }
    path.reverse();
    path
}

pub fn is_lwa(p: &Program) -> WaVerdict {
    is_weakly_acyclic(&strip(p))
}

/// Window-free version: every atom is placed at an explicit time, with one
/// fresh `N` per rule for "now" and a fresh variable per diamond.
pub fn wfree(p: &Program) -> Program {
    let mut out = p.clone();
    for r in &mut out.rules {
        *r = wfree_rule(r);
    }
    out
}

fn wfree_rule(r: &Rule) -> Rule {
    let mut fresh = FreshVars::new(&r.all_vars());
    let n = Term::Var(fresh.fresh("N", Sort::Time));
    let mut body: Vec<LarsAtom> = r
        .body
        .iter()
        .map(|a| match a {
            LarsAtom::Arith(_) | LarsAtom::At(..) => a.clone(),
            LarsAtom::Plain(b) | LarsAtom::WinBox(_, b) => LarsAtom::At(n.clone(), b.clone()),
            LarsAtom::WinAt(_, t, b) => LarsAtom::At(t.clone(), b.clone()),
            LarsAtom::WinDiamond(_, b) => LarsAtom::At(Term::Var(fresh.fresh("U", Sort::Time)), b.clone()),
        })
        .collect();
    let head: Vec<HeadAtom> = r
        .head
        .iter()
        .map(|h| match h {
            HeadAtom::Plain(b) => HeadAtom::At(n.clone(), b.clone()),
            HeadAtom::At(..) => h.clone(),
        })
        .collect();
    let n_var = n.as_var().expect("fresh variable");
    if head.iter().any(|h| h.vars().contains(&n_var)) && !body.iter().any(|a| a.vars().contains(&n_var)) {
        // Keep N range-restricted: it ranges over the whole timeline.
        body.push(LarsAtom::At(n.clone(), BaseAtom::Top));
    }
    Rule {
        id: r.id.clone(),
        body,
        head,
        existentials: r.existentials.clone(),
    }
}

/// Partial grounding: every rule instance `(B \ B_A → ∃z⃗. H)σ` for the
/// homomorphisms σ of `B_A` (the body atoms over `pa`) into `a`.
///
/// Frontier variables bound by σ are recorded in `pinned`, so an instance
/// names its nulls exactly like the rule it came from.
pub fn partial_ground(rules: &[ExRule], a: &FactSet, pa: &BTreeSet<Name>) -> Result<ExRuleSet, AcyclicityError> {
    for r in rules {
        if let Some(h) = r.head.iter().find(|h| pa.contains(&h.pred)) {
            return Err(AcyclicityError::GroundingPredicateInHead(h.pred.clone()));
        }
    }
    let index = FactIndex::new(a);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for r in rules {
        let (ba, rest): (Vec<&ExAtom>, Vec<&ExAtom>) = r.body.iter().partition(|x| pa.contains(x.pred()));
        if ba.is_empty() {
            if seen.insert(r.clone()) {
                out.push(r.clone());
            }
            continue;
        }
        let ba: Vec<NormalAtom> = ba.into_iter().map(ExAtom::to_normal).collect();
        let frontier = r.frontier();
        let mut k = 0;
        for sigma in homomorphisms(&ba, &index) {
            let mut pinned = r.pinned.clone();
            for v in &frontier {
                if let Some(t) = sigma.get(v) {
                    pinned.push((v.name.clone(), t.clone()));
                }
            }
            pinned.sort();
            let head = r
                .head
                .iter()
                .map(|h| ExAtom::Normal(h.clone()).substitute(&sigma).to_normal())
                .collect();
            let mut inst = ExRule {
                id: r.id.clone(),
                origin: r.origin.clone(),
                pinned,
                body: rest.iter().map(|x| x.substitute(&sigma)).collect(),
                head,
                existentials: r.existentials.clone(),
            };
            if seen.insert(inst.clone()) {
                k += 1;
                inst.id = format!("{}_g{k}", r.id).into();
                out.push(inst);
            }
        }
    }
    Ok(out)
}

/// True ground instances over `timeline` of the given arithmetic atoms.
pub fn arithmetic_instances<'a>(atoms: impl IntoIterator<Item = &'a ArithAtom>, timeline: Timeline) -> FactSet {
    let mut out = FactSet::new();
    for a in atoms {
        let vars: Vec<Var> = a
            .terms()
            .into_iter()
            .filter_map(Term::as_var)
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut values = vec![0; vars.len()];
        loop {
            let binding: BTreeMap<Var, Term> = vars.iter().cloned().zip(values.iter().map(|v| Term::Time(*v))).collect();
            let ground = match ExAtom::Arith(a.clone()).substitute(&binding) {
                ExAtom::Arith(g) => g,
                ExAtom::Normal(_) => unreachable!(),
            };
            if ground.eval() == Some(true) {
                out.insert(ground.to_normal());
            }
            // Next assignment in odometer order.
            let mut i = 0;
            while i < values.len() {
                if values[i] < timeline.horizon {
                    values[i] += 1;
                    break;
                }
                values[i] = 0;
                i += 1;
            }
            if i == values.len() {
                break;
            }
        }
    }
    out
}

/// `rew(wfree(P))` without window axioms or `box_top` guards, with `V ≤ V`
/// added for every time variable `V` of a rule, grounded over the true
/// arithmetic instances on `timeline`.
pub fn temporal_grounding(p: &Program, timeline: Timeline) -> ExRuleSet {
    let box_top = box_name(TOP);
    let rules: ExRuleSet = wfree(p)
        .rules
        .iter()
        .map(|r| {
            let mut ex = rewrite_rule(r, false);
            // Time guards are implied by the `V ≤ V` atoms added below.
            ex.body.retain(|a| a.pred() != &*box_top);
            let mut time_vars: BTreeSet<Var> = ex.body_vars();
            time_vars.extend(ex.head_vars());
            for v in time_vars.into_iter().filter(|v| v.sort == Sort::Time) {
                ex.body.push(ExAtom::Arith(ArithAtom::Leq(Term::Var(v.clone()), Term::Var(v))));
            }
            ex
        })
        .collect();
    let arith: Vec<ArithAtom> = rules
        .iter()
        .flat_map(|r| r.body.iter())
        .filter_map(|a| match a {
            ExAtom::Arith(x) => Some(x.clone()),
            ExAtom::Normal(_) => None,
        })
        .collect();
    let a = arithmetic_instances(&arith, timeline);
    let pa: BTreeSet<Name> = [Name::from(LEQ), Name::from(PLUS_EQ)].into();
    partial_ground(&rules, &a, &pa).expect("rewritten heads never use arithmetic predicates")
}

/// Name of the time-indexed predicate for `p` at `t`.
pub fn time_indexed_name(p: &str, t: u32) -> Name {
    format!("{p}__t{t}").into()
}

/// `box_p(s⃗, 0, t) ↦ p__t<t>(s⃗)`; other predicates are kept.
pub fn tfree_atom(a: &NormalAtom) -> Result<NormalAtom, AcyclicityError> {
    if a.pred.starts_with(AT_PREFIX) || &*a.pred == LEQ || &*a.pred == PLUS_EQ {
        return Err(AcyclicityError::NotTimeFreeable(a.to_string()));
    }
    let Some(p) = a.pred.strip_prefix(BOX_PREFIX) else {
        return Ok(a.clone());
    };
    let k = a.arity();
    if k < 2 {
        return Err(AcyclicityError::NotTimeFreeable(a.to_string()));
    }
    match (&a.args[k - 2], &a.args[k - 1]) {
        (Term::Time(0), Term::Time(t)) => Ok(NormalAtom::new(time_indexed_name(p, *t), a.args[..k - 2].to_vec())),
        (Term::Time(_), Term::Time(_)) => Err(AcyclicityError::NonzeroWindow(a.clone())),
        _ => Err(AcyclicityError::NonGroundTime(a.clone())),
    }
}

pub fn tfree(rules: &[ExRule]) -> Result<ExRuleSet, AcyclicityError> {
    rules
        .iter()
        .map(|r| {
            let body = r
                .body
                .iter()
                .map(|a| match a {
                    ExAtom::Normal(n) => tfree_atom(n).map(ExAtom::Normal),
                    ExAtom::Arith(x) => Err(AcyclicityError::NotTimeFreeable(x.to_string())),
                })
                .collect::<Result<_, _>>()?;
            let head = r.head.iter().map(tfree_atom).collect::<Result<_, _>>()?;
            Ok(ExRule {
                body,
                head,
                ..r.clone()
            })
        })
        .collect()
}

pub fn tfree_facts(facts: &FactSet) -> Result<FactSet, AcyclicityError> {
    facts.iter().map(tfree_atom).collect()
}

/// Whether the time-free temporal grounding over `timeline` is weakly
/// acyclic.
pub fn is_tlwa(p: &Program, timeline: Timeline) -> WaVerdict {
    let g = temporal_grounding(p, timeline);
    let tf = tfree(&g).expect("temporal groundings only contain ground box atoms of window 0");
    is_weakly_acyclic(&tf)
}
