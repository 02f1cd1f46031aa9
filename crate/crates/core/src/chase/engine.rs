//! Semi-naive evaluation of the breadth-first skolem chase over interned
//! terms.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::lars::NormalAtom;
use crate::rewrite::{ExAtom, ExRule};
use crate::term::{Name, Null, NullKey, Sort, Term};

type Id = u32;
const UNBOUND: Id = Id::MAX;

#[derive(Default)]
struct Dictionary {
    ids: FxHashMap<Term, Id>,
    terms: Vec<Term>,
    sorts: Vec<Sort>,
}

impl Dictionary {
    fn intern(&mut self, t: &Term) -> (Id, bool) {
        if let Some(&id) = self.ids.get(t) {
            return (id, false);
        }
        let id = self.terms.len() as Id;
        self.ids.insert(t.clone(), id);
        self.terms.push(t.clone());
        self.sorts.push(t.sort());
        (id, true)
    }
}

struct Relation {
    name: Name,
    arity: usize,
    rows: Vec<Id>,
    set: FxHashSet<Box<[Id]>>,
    /// Per column: value → ascending row numbers.
    index: Vec<FxHashMap<Id, Vec<u32>>>,
}

impl Relation {
    fn new(name: Name, arity: usize) -> Self {
        Relation {
            name,
            arity,
            rows: Vec::new(),
            set: FxHashSet::default(),
            index: vec![FxHashMap::default(); arity],
        }
    }

    fn len(&self) -> usize {
        self.set.len()
    }

    fn row(&self, i: u32) -> &[Id] {
        let i = i as usize * self.arity;
        &self.rows[i..i + self.arity]
    }

    fn contains(&self, tuple: &[Id]) -> bool {
        self.set.contains(tuple)
    }

    fn insert(&mut self, tuple: &[Id]) -> bool {
        if self.set.contains(tuple) {
            return false;
        }
        let row = self.len() as u32;
        self.set.insert(tuple.into());
        self.rows.extend_from_slice(tuple);
        for (col, v) in tuple.iter().enumerate() {
            self.index[col].entry(*v).or_default().push(row);
        }
        true
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Const(Id),
}

#[derive(Clone, Copy, Debug)]
enum HeadSlot {
    Var(usize),
    Const(Id),
    Exist(usize),
}

struct CAtom {
    rel: usize,
    terms: Vec<Slot>,
}

struct CHead {
    rel: usize,
    terms: Vec<HeadSlot>,
}

/// One part of a null key: a frontier variable or a pinned value.
struct KeyPart {
    name: Name,
    src: Slot,
}

struct CRule {
    scope: Name,
    scope_id: u32,
    body: Vec<CAtom>,
    head: Vec<CHead>,
    var_sorts: Vec<Sort>,
    existentials: Vec<(Name, u32)>,
    key: Vec<KeyPart>,
    /// Join order per delta position.
    plans: Vec<Plan>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub round: u64,
    pub new_facts: usize,
    pub new_nulls: usize,
}

pub(crate) enum Finish {
    Saturated,
    Exhausted,
    /// Stopped mid-round because the fact limit was passed.
    Limit,
}

pub(crate) struct Engine {
    dict: Dictionary,
    rels: Vec<Relation>,
    rel_ids: FxHashMap<(Name, usize), usize>,
    rules: Vec<CRule>,
    nulls: FxHashMap<(u32, u32, Box<[Id]>), Id>,
    pub(crate) nulls_created: usize,
    name_ids: FxHashMap<Name, u32>,
}

const SHORT_KEY: usize = 4;

/// Values of a step's live variables, inline when there are few.
#[derive(PartialEq, Eq, Hash)]
enum MemoKey {
    Short([Id; SHORT_KEY]),
    Long(Box<[Id]>),
}

/// Memo probes per step before the hit rate decides whether to continue.
const MEMO_TRIAL: u32 = 256;

struct Sink<'a> {
    out: &'a mut Vec<Id>,
    seen: &'a mut FxHashSet<Box<[Id]>>,
    /// Per step: explored subtrees and whether they reached a match.
    memo: Vec<FxHashMap<MemoKey, bool>>,
    /// Per step: memo probes and hits so far.
    probes: Vec<(u32, u32)>,
    key: Vec<Id>,
    count: usize,
}

fn vars_of(a: &CAtom) -> impl Iterator<Item = usize> + '_ {
    a.terms.iter().filter_map(|t| match t {
        Slot::Var(x) => Some(*x),
        Slot::Const(_) => None,
    })
}

/// How one argument of a body atom is matched at a given join step.
#[derive(Clone, Copy, Debug)]
enum Op {
    Const(Id),
    /// Compare with a variable bound by an earlier step.
    Check(usize),
    /// Compare with a variable bound earlier in the same atom.
    Repeat(usize),
    /// First occurrence of a variable: bind it.
    Bind(usize),
}

struct Step {
    atom: usize,
    ops: Vec<Op>,
    binds: Vec<usize>,
    /// Variables the rest of the join depends on, when some variable bound
    /// so far no longer matters; explored subtrees are memoized on them.
    live: Option<Vec<usize>>,
    /// Every head variable is already bound, so one completion is enough.
    exists_only: bool,
}

/// A join order for one delta position.
struct Plan {
    steps: Vec<Step>,
    /// Memo key variables at the leaf: the head variables, if not all.
    leaf: Option<Vec<usize>>,
}

impl Plan {
    fn new(atoms: &[CAtom], order: Vec<usize>, relevant: Option<&[bool]>, nvars: usize) -> Self {
        let mut bound = vec![false; nvars];
        let mut steps = Vec::with_capacity(order.len());
        for (i, &ai) in order.iter().enumerate() {
            let live = relevant.and_then(|relevant| {
                let mut l = relevant.to_vec();
                for &aj in &order[i..] {
                    for x in vars_of(&atoms[aj]) {
                        l[x] = true;
                    }
                }
                (0..nvars)
                    .any(|x| bound[x] && !l[x])
                    .then(|| (0..nvars).filter(|&x| bound[x] && l[x]).collect())
            });
            let exists_only = relevant.is_some_and(|r| (0..nvars).all(|x| !r[x] || bound[x]));
            let mut binds: Vec<usize> = Vec::new();
            let ops = atoms[ai]
                .terms
                .iter()
                .map(|t| match *t {
                    Slot::Const(c) => Op::Const(c),
                    Slot::Var(x) if binds.contains(&x) => Op::Repeat(x),
                    Slot::Var(x) if bound[x] => Op::Check(x),
                    Slot::Var(x) => {
                        bound[x] = true;
                        binds.push(x);
                        Op::Bind(x)
                    }
                })
                .collect();
            steps.push(Step {
                atom: ai,
                ops,
                binds,
                live,
                exists_only,
            });
        }
        let leaf = relevant.map(|r| (0..nvars).filter(|&x| r[x]).collect());
        Plan { steps, leaf }
    }
}

fn join_plan(atoms: &[CAtom], first: usize, nvars: usize) -> Vec<usize> {
    let mut bound = vec![false; nvars];
    let mut order = vec![first];
    let mut used = vec![false; atoms.len()];
    used[first] = true;
    let mark = |a: &CAtom, bound: &mut Vec<bool>| {
        for t in &a.terms {
            if let Slot::Var(v) = t {
                bound[*v] = true;
            }
        }
    };
    mark(&atoms[first], &mut bound);
    while order.len() < atoms.len() {
        let score = |a: &CAtom| {
            let b = a
                .terms
                .iter()
                .filter(|t| match t {
                    Slot::Const(_) => true,
                    Slot::Var(v) => bound[*v],
                })
                .count();
            (b > 0, b)
        };
        let next = (0..atoms.len())
            .filter(|i| !used[*i])
            .max_by_key(|&i| (score(&atoms[i]), std::cmp::Reverse(i)))
            .unwrap();
        used[next] = true;
        mark(&atoms[next], &mut bound);
        order.push(next);
    }
    order
}

impl Engine {
    pub(crate) fn new() -> Self {
        Engine {
            dict: Dictionary::default(),
            rels: Vec::new(),
            rel_ids: FxHashMap::default(),
            rules: Vec::new(),
            nulls: FxHashMap::default(),
            nulls_created: 0,
            name_ids: FxHashMap::default(),
        }
    }

    fn rel(&mut self, name: &Name, arity: usize) -> usize {
        if let Some(&r) = self.rel_ids.get(&(name.clone(), arity)) {
            return r;
        }
        let r = self.rels.len();
        self.rels.push(Relation::new(name.clone(), arity));
        self.rel_ids.insert((name.clone(), arity), r);
        r
    }

    fn name_id(&mut self, n: &Name) -> u32 {
        let next = self.name_ids.len() as u32;
        *self.name_ids.entry(n.clone()).or_insert(next)
    }

    /// Interns a term; nulls read from input are registered under their key.
    fn intern(&mut self, t: &Term) -> Id {
        if let Term::Null(n) = t {
            let key = n.key().clone();
            let frontier: Vec<Id> = key.frontier.iter().map(|(_, v)| self.intern(v)).collect();
            let (id, _) = self.dict.intern(t);
            let scope = self.name_id(&key.rule);
            let var = self.name_id(&key.var);
            self.nulls.entry((scope, var, frontier.into())).or_insert(id);
            id
        } else {
            self.dict.intern(t).0
        }
    }

    pub(crate) fn add_fact(&mut self, a: &NormalAtom) {
        let r = self.rel(&a.pred, a.arity());
        let tuple: Vec<Id> = a.args.iter().map(|t| self.intern(t)).collect();
        self.rels[r].insert(&tuple);
    }

    pub(crate) fn add_rule(&mut self, r: &ExRule) {
        let mut vars: Vec<crate::term::Var> = Vec::new();
        let slot_of = |v: &crate::term::Var, vars: &mut Vec<crate::term::Var>| match vars.iter().position(|x| x == v) {
            Some(i) => i,
            None => {
                vars.push(v.clone());
                vars.len() - 1
            }
        };
        let mut body = Vec::new();
        for a in &r.body {
            let n = match a {
                ExAtom::Normal(n) => n.clone(),
                ExAtom::Arith(_) => a.to_normal(),
            };
            let rel = self.rel(&n.pred, n.arity());
            let terms = n
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Slot::Var(slot_of(v, &mut vars)),
                    other => Slot::Const(self.intern(other)),
                })
                .collect();
            body.push(CAtom { rel, terms });
        }
        let nbody = vars.len();
        let mut head = Vec::new();
        for h in &r.head {
            let rel = self.rel(&h.pred, h.arity());
            let terms = h
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => match r.existentials.iter().position(|z| z == v) {
                        Some(k) => HeadSlot::Exist(k),
                        None => HeadSlot::Var(slot_of(v, &mut vars)),
                    },
                    other => HeadSlot::Const(self.intern(other)),
                })
                .collect();
            head.push(CHead { rel, terms });
        }
        // A head variable outside the body has no binding; such rules never
        // come out of the rewriting and are rejected up front.
        assert!(
            vars.len() == nbody,
            "rule {} has a non-existential head variable outside its body",
            r.id
        );
        let mut key: Vec<KeyPart> = r
            .frontier()
            .into_iter()
            .map(|v| KeyPart {
                src: Slot::Var(vars.iter().position(|x| *x == v).unwrap()),
                name: v.name.clone(),
            })
            .collect();
        for (name, t) in &r.pinned {
            key.push(KeyPart {
                name: name.clone(),
                src: Slot::Const(self.intern(t)),
            });
        }
        key.sort_by(|a, b| a.name.cmp(&b.name));
        let existentials = r
            .existentials
            .iter()
            .map(|z| (z.name.clone(), self.name_id(&z.name)))
            .collect();
        let mut relevant = vec![false; nbody];
        for h in &head {
            for t in &h.terms {
                if let HeadSlot::Var(x) = t {
                    relevant[*x] = true;
                }
            }
        }
        let relevant = relevant.contains(&false).then_some(relevant);
        let plans = (0..body.len())
            .map(|i| Plan::new(&body, join_plan(&body, i, nbody), relevant.as_deref(), nbody))
            .collect();
        let scope_id = self.name_id(&r.origin);
        self.rules.push(CRule {
            scope: r.origin.clone(),
            scope_id,
            body,
            head,
            var_sorts: vars.iter().map(|v| v.sort).collect(),
            existentials,
            key,
            plans,
        });
    }

    pub(crate) fn fact_count(&self) -> usize {
        self.rels.iter().map(Relation::len).sum()
    }

    /// Enumerates body matches with atom `delta` restricted to the rows in
    /// `[stable, total)` of its relation, earlier atoms to `[0, stable)` and
    /// later atoms to `[0, total)`. Bindings are appended to `out`; for rules
    /// with body-only variables they are cut down to the head variables and
    /// deduplicated through `seen`.
    fn matches(
        &self,
        rule: &CRule,
        delta: usize,
        stable: &[usize],
        total: &[usize],
        out: &mut Vec<Id>,
        seen: &mut FxHashSet<Box<[Id]>>,
    ) -> usize {
        let nvars = rule.var_sorts.len();
        let ranges: Vec<(u32, u32)> = rule
            .body
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let (lo, hi) = match j.cmp(&delta) {
                    std::cmp::Ordering::Less => (0, stable[a.rel]),
                    std::cmp::Ordering::Equal => (stable[a.rel], total[a.rel]),
                    std::cmp::Ordering::Greater => (0, total[a.rel]),
                };
                (lo as u32, hi as u32)
            })
            .collect();
        if ranges.iter().any(|(lo, hi)| lo >= hi) {
            return 0;
        }
        let mut binding = vec![UNBOUND; nvars];
        let mut sink = Sink {
            out,
            seen,
            memo: (0..rule.body.len()).map(|_| FxHashMap::default()).collect(),
            probes: vec![(0, 0); rule.body.len()],
            key: Vec::new(),
            count: 0,
        };
        self.join(rule, &rule.plans[delta], 0, &ranges, &mut binding, &mut sink);
        sink.count
    }

    fn join(&self, rule: &CRule, plan: &Plan, step: usize, ranges: &[(u32, u32)], binding: &mut [Id], sink: &mut Sink<'_>) -> bool {
        let Some(st) = plan.steps.get(step) else {
            return Self::leaf(plan, binding, sink);
        };
        let (probes, hits) = sink.probes[step];
        // Stop memoizing a step whose subtrees rarely repeat.
        let worth_it = probes < MEMO_TRIAL || hits * 4 >= probes;
        if let (Some(live), true) = (&st.live, worth_it) {
            sink.probes[step].0 += 1;
            let key = if live.len() <= SHORT_KEY {
                let mut k = [UNBOUND; SHORT_KEY];
                for (slot, &x) in k.iter_mut().zip(live) {
                    *slot = binding[x];
                }
                MemoKey::Short(k)
            } else {
                MemoKey::Long(live.iter().map(|&x| binding[x]).collect())
            };
            if let Some(&found) = sink.memo[step].get(&key) {
                sink.probes[step].1 += 1;
                return found;
            }
            let found = self.join_step(rule, plan, step, ranges, binding, sink);
            sink.memo[step].insert(key, found);
            return found;
        }
        self.join_step(rule, plan, step, ranges, binding, sink)
    }

    fn leaf(plan: &Plan, binding: &[Id], sink: &mut Sink<'_>) -> bool {
        match &plan.leaf {
            None => sink.out.extend_from_slice(binding),
            Some(keep) => {
                sink.key.clear();
                sink.key.extend(keep.iter().map(|&x| binding[x]));
                if sink.seen.contains(sink.key.as_slice()) {
                    return true;
                }
                sink.seen.insert(sink.key.as_slice().into());
                let start = sink.out.len();
                sink.out.resize(start + binding.len(), UNBOUND);
                for &x in keep {
                    sink.out[start + x] = binding[x];
                }
            }
        }
        sink.count += 1;
        true
    }

    fn join_step(
        &self,
        rule: &CRule,
        plan: &Plan,
        step: usize,
        ranges: &[(u32, u32)],
        binding: &mut [Id],
        sink: &mut Sink<'_>,
    ) -> bool {
        let st = &plan.steps[step];
        let rel = &self.rels[rule.body[st.atom].rel];
        let (lo, hi) = ranges[st.atom];
        let mut posting: Option<&[u32]> = None;
        for (col, op) in st.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Check(x) => binding[x],
                Op::Bind(_) | Op::Repeat(_) => continue,
            };
            let list = rel.index[col].get(&v).map_or(&[][..], |l| l.as_slice());
            if posting.is_none_or(|p| list.len() < p.len()) {
                posting = Some(list);
            }
        }
        let mut found = false;
        // Returns whether the search at this step can stop.
        let mut visit = |row: u32, binding: &mut [Id]| -> bool {
            let tuple = rel.row(row);
            let ok = st.ops.iter().zip(tuple).all(|(op, &v)| match *op {
                Op::Const(c) => c == v,
                Op::Check(x) | Op::Repeat(x) => binding[x] == v,
                Op::Bind(x) => {
                    if self.dict.sorts[v as usize] != rule.var_sorts[x] {
                        return false;
                    }
                    binding[x] = v;
                    true
                }
            });
            if ok && self.join(rule, plan, step + 1, ranges, binding, sink) {
                found = true;
            }
            for &x in &st.binds {
                binding[x] = UNBOUND;
            }
            found && st.exists_only
        };
        match posting {
            Some(list) => {
                let start = list.partition_point(|&r| r < lo);
                for &row in &list[start..] {
                    if row >= hi || visit(row, binding) {
                        break;
                    }
                }
            }
            None => {
                for row in lo..hi {
                    if visit(row, binding) {
                        break;
                    }
                }
            }
        }
        found
    }

    fn key_values(rule: &CRule, binding: &[Id]) -> Box<[Id]> {
        rule.key
            .iter()
            .map(|k| match k.src {
                Slot::Var(x) => binding[x],
                Slot::Const(c) => c,
            })
            .collect()
    }

    fn head_tuple(&self, h: &CHead, binding: &[Id], nulls: &[Id], buf: &mut Vec<Id>) {
        buf.clear();
        buf.extend(h.terms.iter().map(|t| match *t {
            HeadSlot::Var(x) => binding[x],
            HeadSlot::Const(c) => c,
            HeadSlot::Exist(k) => nulls[k],
        }));
    }

    /// Whether the match is active: its head, with the named nulls of the
    /// match, is not contained in the current facts.
    fn is_active(&self, rule: &CRule, binding: &[Id], key: &[Id], nulls: &mut Vec<Id>, buf: &mut Vec<Id>) -> bool {
        nulls.clear();
        for (_, var) in &rule.existentials {
            match self.nulls.get(&(rule.scope_id, *var, key.into())) {
                Some(&n) => nulls.push(n),
                None => return true,
            }
        }
        rule.head.iter().any(|h| {
            self.head_tuple(h, binding, nulls, buf);
            !self.rels[h.rel].contains(buf)
        })
    }

    fn apply(&mut self, ri: usize, binding: &[Id]) -> bool {
        let rule = &self.rules[ri];
        let key = Self::key_values(rule, binding);
        let mut nulls = Vec::with_capacity(rule.existentials.len());
        let mut buf = Vec::new();
        if !self.is_active(rule, binding, &key, &mut nulls, &mut buf) {
            return false;
        }
        if nulls.len() < rule.existentials.len() {
            nulls.clear();
            let scope = rule.scope.clone();
            let scope_id = rule.scope_id;
            let frontier: Vec<(Name, Term)> = rule
                .key
                .iter()
                .zip(key.iter())
                .map(|(k, v)| (k.name.clone(), self.dict.terms[*v as usize].clone()))
                .collect();
            let exist = rule.existentials.clone();
            for (name, var) in exist {
                let k = (scope_id, var, key.clone());
                let id = match self.nulls.get(&k) {
                    Some(&id) => id,
                    None => {
                        let null = Term::Null(Null::new(NullKey {
                            rule: scope.clone(),
                            var: name,
                            frontier: frontier.clone(),
                        }));
                        let (id, fresh) = self.dict.intern(&null);
                        if fresh {
                            self.nulls_created += 1;
                        }
                        self.nulls.insert(k, id);
                        id
                    }
                };
                nulls.push(id);
            }
        }
        let rule = &self.rules[ri];
        let mut tuples = Vec::with_capacity(rule.head.len());
        for h in &rule.head {
            self.head_tuple(h, binding, &nulls, &mut buf);
            tuples.push((h.rel, buf.clone()));
        }
        let mut added = false;
        for (rel, t) in tuples {
            added |= self.rels[rel].insert(&t);
        }
        added
    }

    /// Runs rounds until saturation or until `fuel` productive rounds have
    /// been performed; in the latter case one more round (without applying
    /// it) decides whether the result is saturated.
    pub(crate) fn run(&mut self, fuel: u64, max_facts: Option<usize>, trace: &mut dyn FnMut(RoundStats)) -> (Finish, u64) {
        let mut stable = vec![0; self.rels.len()];
        let mut round = 0;
        let mut buf = Vec::new();
        let mut seen = FxHashSet::default();
        loop {
            let total: Vec<usize> = self.rels.iter().map(Relation::len).collect();
            let dry = round == fuel;
            let before_facts = self.fact_count();
            let before_nulls = self.nulls_created;
            for ri in 0..self.rules.len() {
                let rule = &self.rules[ri];
                let nvars = rule.var_sorts.len();
                buf.clear();
                seen.clear();
                let mut count = 0;
                if rule.body.is_empty() {
                    count = usize::from(round == 0);
                } else {
                    for d in 0..rule.body.len() {
                        count += self.matches(rule, d, &stable, &total, &mut buf, &mut seen);
                    }
                }
                for m in 0..count {
                    let b = &buf[m * nvars..(m + 1) * nvars];
                    if dry {
                        let rule = &self.rules[ri];
                        let key = Self::key_values(rule, b);
                        let (mut nulls, mut tmp) = (Vec::new(), Vec::new());
                        if self.is_active(rule, b, &key, &mut nulls, &mut tmp) {
                            return (Finish::Exhausted, round);
                        }
                    } else {
                        self.apply(ri, b);
                    }
                }
                if max_facts.is_some_and(|n| self.fact_count() > n) {
                    return (Finish::Limit, round);
                }
            }
            if dry {
                return (Finish::Saturated, round);
            }
            let new_facts = self.fact_count() - before_facts;
            if new_facts == 0 {
                return (Finish::Saturated, round);
            }
            round += 1;
            trace(RoundStats {
                round,
                new_facts,
                new_nulls: self.nulls_created - before_nulls,
            });
            stable = total;
        }
    }

    /// All facts, converted back to terms.
    pub(crate) fn facts(&self) -> impl Iterator<Item = NormalAtom> + '_ {
        self.rels.iter().flat_map(move |r| {
            (0..r.len() as u32).map(move |i| {
                NormalAtom::new(
                    r.name.clone(),
                    r.row(i).iter().map(|v| self.dict.terms[*v as usize].clone()).collect(),
                )
            })
        })
    }

    pub(crate) fn facts_matching<'a>(&'a self, keep: impl Fn(&str) -> bool + 'a) -> impl Iterator<Item = NormalAtom> + 'a {
        self.rels.iter().filter(move |r| keep(&r.name)).flat_map(move |r| {
            (0..r.len() as u32).map(move |i| {
                NormalAtom::new(
                    r.name.clone(),
                    r.row(i).iter().map(|v| self.dict.terms[*v as usize].clone()).collect(),
                )
            })
        })
    }
}
