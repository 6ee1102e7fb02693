//! Rule evaluation as nested leapfrog joins, one per key variable.

use std::fmt::Write as _;

use super::oracle::{Oracle, OracleCursor, OracleNode};
use super::trace::{Op, Trace, TraceEvent};
use super::TrieIterator;
use crate::error::{Error, Result};
use crate::interval::{IntervalIndex, SensRecord};
use crate::key::{Key, Value};
use crate::rule::{Operand, Part, Plan, Step};
use crate::store::{RelationVersion, VersionTrie};

/// One satisfying assignment: key variables in key order, then value
/// variables in plan order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub keys: Vec<i64>,
    pub values: Vec<Value>,
}

/// Sensitivity indices of one rule, one per indexed `(atom, level)`.
#[derive(Clone, Debug, Default)]
pub struct Sensitivities {
    levels: Vec<Vec<Option<IntervalIndex>>>,
}

impl Sensitivities {
    pub fn new(plan: &Plan) -> Self {
        let levels = plan
            .atoms
            .iter()
            .map(|a| {
                (0..a.depths.len())
                    .map(|l| a.indexed[l].then(|| IntervalIndex::new(a.alpha[l].len(), a.gamma[l].len())))
                    .collect()
            })
            .collect();
        Sensitivities { levels }
    }

    pub fn index(&self, atom: usize, level: usize) -> Option<&IntervalIndex> {
        self.levels.get(atom)?.get(level)?.as_ref()
    }

    pub fn index_mut(&mut self, atom: usize, level: usize) -> Option<&mut IntervalIndex> {
        self.levels.get_mut(atom)?.get_mut(level)?.as_mut()
    }

    /// Total records over all indices.
    pub fn len(&self) -> usize {
        self.levels.iter().flatten().flatten().map(IntervalIndex::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.levels.iter_mut().flatten().flatten().for_each(IntervalIndex::clear);
    }

    /// Index name on its own line, then one indented line per record:
    /// prefix keys, the interval, and context keys after `@`.
    pub fn render(&self, plan: &Plan) -> String {
        let mut out = String::new();
        for (a, l) in plan.indexed_levels() {
            let _ = writeln!(out, "{}", plan.atoms[a].index_name(l, &plan.key_vars));
            for r in self.index(a, l).map(IntervalIndex::records).unwrap_or_default() {
                let mut line = String::from(" ");
                for k in &r.prefix {
                    let _ = write!(line, " {k}");
                }
                let _ = write!(line, " {r}");
                if !r.context.is_empty() {
                    line.push_str(" @");
                    for k in &r.context {
                        let _ = write!(line, " {k}");
                    }
                }
                let _ = writeln!(out, "{line}");
            }
        }
        out
    }
}

#[derive(Default)]
pub struct EvalOptions<'a> {
    /// Restrict the search to the oracle's admitted region.
    pub oracle: Option<&'a Oracle>,
    /// Record sensitivity intervals here.
    pub record: Option<&'a mut Sensitivities>,
    pub trace: bool,
}

#[derive(Clone, Debug, Default)]
pub struct EvalOutput {
    /// Sorted by key order.
    pub assignments: Vec<Assignment>,
    /// Iterator operations, oracle steps included.
    pub ops: u64,
    pub trace: Option<Trace>,
    pub sens_emitted: u64,
    pub sens_added: u64,
}

/// Evaluate the body of `plan`. `versions[i]` feeds `plan.atoms[i]`.
pub fn evaluate(plan: &Plan, versions: &[RelationVersion], opts: EvalOptions<'_>) -> Result<EvalOutput> {
    if versions.len() != plan.atoms.len() {
        return Err(Error::Config(format!("{} atoms but {} versions", plan.atoms.len(), versions.len())));
    }
    for (a, v) in plan.atoms.iter().zip(versions) {
        if v.arity() != a.schema.arity || v.schema().functional != a.schema.functional {
            return Err(Error::Config(format!("version of {} does not match {}", v.schema().name, a.pred)));
        }
    }
    let mut ctx = Ctx {
        plan,
        iters: versions.iter().map(RelationVersion::trie).collect(),
        slots: vec![Value::Int(0); plan.slots()],
        keys: vec![0; plan.depth()],
        alive: vec![None; plan.unions],
        ops: 0,
        trace: opts.trace.then(Vec::new),
        rec: opts.record,
        emitted: 0,
        added: 0,
        out: Vec::new(),
    };
    ctx.search(0, opts.oracle.map(Oracle::root), opts.oracle.is_some())?;
    Ok(EvalOutput {
        assignments: ctx.out,
        ops: ctx.ops,
        trace: ctx.trace.map(|events| Trace { labels: plan.atoms.iter().map(|a| a.label.clone()).collect(), events }),
        sens_emitted: ctx.emitted,
        sens_added: ctx.added,
    })
}

/// Keys present in every opened iterator, ascending. After each match the
/// first iterator in the slice is advanced.
pub fn leapfrog_join(iters: &mut [&mut dyn TrieIterator]) -> Vec<i64> {
    let n = iters.len();
    let mut out = Vec::new();
    if n == 0 || iters.iter().any(|it| it.at_end()) {
        return out;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| iters[i].key());
    let mut p = 0;
    loop {
        // Search.
        loop {
            let max = iters[order[(p + n - 1) % n]].key();
            let i = order[p];
            if iters[i].key() == max {
                break;
            }
            iters[i].seek(max);
            if iters[i].at_end() {
                return out;
            }
            p = (p + 1) % n;
        }
        out.push(iters[0].key());
        iters[0].next();
        if iters[0].at_end() {
            return out;
        }
        p = (order.iter().position(|&i| i == 0).unwrap() + 1) % n;
    }
}

struct Ctx<'a> {
    plan: &'a Plan,
    iters: Vec<VersionTrie>,
    slots: Vec<Value>,
    keys: Vec<i64>,
    /// Live branches per disjunction; `None` means all.
    alive: Vec<Option<Vec<bool>>>,
    ops: u64,
    trace: Option<Vec<TraceEvent>>,
    rec: Option<&'a mut Sensitivities>,
    emitted: u64,
    added: u64,
    out: Vec<Assignment>,
}

fn pos(it: &VersionTrie) -> Option<i64> {
    (!it.at_end()).then(|| it.key())
}

impl<'a> Ctx<'a> {
    fn log(&mut self, a: usize, op: Op, depth: usize, from: Option<i64>, arg: Option<i64>, to: Option<i64>) {
        if let Some(t) = &mut self.trace {
            t.push(TraceEvent { iter: a as u32, op, depth: depth as u32, from, arg, to });
        }
    }

    fn sens(&mut self, a: usize, lo: Key, to: Option<i64>) {
        let Some(rec) = self.rec.as_deref_mut() else { return };
        let ap = &self.plan.atoms[a];
        let level = self.iters[a].depth() - 1;
        if !ap.indexed[level] {
            return;
        }
        let prefix = ap.alpha[level].iter().map(|&d| self.keys[d]).collect();
        let context = ap.gamma[level].iter().map(|&d| self.keys[d]).collect();
        let hi = to.map_or(Key::Max, Key::Fin);
        self.emitted += 1;
        let ix = rec.index_mut(a, level).expect("index for an indexed level");
        if ix.add(SensRecord::new(prefix, lo, hi, context)).expect("well-formed sensitivity") {
            self.added += 1;
        }
    }

    fn open(&mut self, a: usize) {
        self.iters[a].open();
        self.ops += 1;
        let to = pos(&self.iters[a]);
        self.log(a, Op::Open, self.iters[a].depth(), None, None, to);
        self.sens(a, Key::Min, to);
    }

    fn next(&mut self, a: usize) {
        let Some(from) = pos(&self.iters[a]) else { return };
        self.iters[a].next();
        self.ops += 1;
        let to = pos(&self.iters[a]);
        self.log(a, Op::Next, self.iters[a].depth(), Some(from), None, to);
        self.sens(a, Key::Fin(from), to);
    }

    fn seek(&mut self, a: usize, k: i64) {
        let Some(from) = pos(&self.iters[a]) else { return };
        if from >= k {
            return;
        }
        self.iters[a].seek(k);
        self.ops += 1;
        let to = pos(&self.iters[a]);
        self.log(a, Op::Seek, self.iters[a].depth(), Some(from), Some(k), to);
        self.sens(a, Key::Fin(k), to);
    }

    fn up(&mut self, a: usize) {
        let from = pos(&self.iters[a]);
        let depth = self.iters[a].depth();
        self.iters[a].up();
        self.ops += 1;
        let to = (depth > 1).then(|| self.iters[a].key());
        self.log(a, Op::Up, depth, from, None, to);
    }

    fn is_alive(&self, id: usize, branch: usize) -> bool {
        self.alive[id].as_ref().is_none_or(|m| m[branch])
    }

    fn build<'o>(&mut self, parts: &[Part], oracle: Option<&'o OracleNode>, opened: &mut Vec<usize>) -> Inter<'o> {
        let mut kids = Vec::with_capacity(parts.len() + 1);
        for p in parts {
            match p {
                Part::Atom(a) => {
                    self.open(*a);
                    opened.push(*a);
                    kids.push(Node::Atom(*a));
                }
                Part::Union { id, branches } => {
                    let mut live = Vec::new();
                    for (b, bparts) in branches.iter().enumerate() {
                        if self.is_alive(*id, b) && !bparts.is_empty() {
                            live.push((b, self.build(bparts, None, opened)));
                        }
                    }
                    let mut u = Union { id: *id, width: branches.len(), branches: live, key: 0, end: false };
                    u.refresh();
                    kids.push(Node::Union(Box::new(u)));
                }
            }
        }
        if let Some(o) = oracle {
            kids.push(Node::Oracle(OracleCursor::new(o)));
        }
        let mut inter = Inter { order: (0..kids.len()).collect(), kids, p: 0, key: 0, end: false };
        inter.init(self);
        inter
    }

    /// Record which disjunction branches matched `k`; returns the prior
    /// masks for restoring.
    fn mark_alive(&mut self, inter: &Inter<'_>, k: i64, saved: &mut Vec<(usize, Option<Vec<bool>>)>) {
        for kid in &inter.kids {
            if let Node::Union(u) = kid {
                let mut mask = vec![false; u.width];
                for (b, br) in &u.branches {
                    if !br.end && br.key == k {
                        mask[*b] = true;
                        self.mark_alive(br, k, saved);
                    }
                }
                saved.push((u.id, self.alive[u.id].replace(mask)));
            }
        }
    }

    fn value(&self, o: Operand) -> Value {
        match o {
            Operand::Slot(s) => self.slots[s],
            Operand::Const(v) => v,
        }
    }

    fn run_steps(&mut self, d: usize) -> Result<bool> {
        let plan = self.plan;
        for step in &plan.steps[d] {
            match step {
                Step::Read { atom, slot, bind } => {
                    let v = self.iters[*atom].value().ok_or_else(|| Error::Type(format!("{} record has no value", plan.atoms[*atom].pred)))?;
                    if *bind {
                        self.slots[*slot] = v;
                    } else if self.slots[*slot] != v {
                        return Ok(false);
                    }
                }
                Step::Prim { op, args, out, bind } => {
                    let (a, b) = (self.value(args[0]), self.value(args[1]));
                    match out {
                        Some(o) => {
                            let r = op.compute(a, b);
                            match (bind, o) {
                                (true, Operand::Slot(s)) => self.slots[*s] = r,
                                _ => {
                                    if self.value(*o) != r {
                                        return Ok(false);
                                    }
                                }
                            }
                        }
                        None => {
                            if !op.test(a, b) {
                                return Ok(false);
                            }
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// Enumerate bindings from depth `d` on. Returns whether any full
    /// assignment was found.
    fn search(&mut self, d: usize, node: Option<&OracleNode>, restricted: bool) -> Result<bool> {
        let plan = self.plan;
        if d == plan.depth() {
            let values = self.slots[plan.depth()..].to_vec();
            self.out.push(Assignment { keys: self.keys.clone(), values });
            return Ok(true);
        }
        let mut opened = Vec::new();
        let oracle = if restricted { node } else { None };
        let mut join = self.build(&plan.levels[d], oracle, &mut opened);
        let mut found = false;
        let mut saved = Vec::new();
        while !join.end {
            let k = join.key;
            self.keys[d] = k;
            self.slots[d] = Value::Int(k);
            self.mark_alive(&join, k, &mut saved);
            if self.run_steps(d)? {
                let (child, still) = match oracle {
                    Some(n) if !n.covers(k) => (n.child(k), true),
                    _ => (None, false),
                };
                if self.search(d + 1, child, still)? {
                    found = true;
                }
            }
            for (id, m) in saved.drain(..).rev() {
                self.alive[id] = m;
            }
            if found && plan.short_circuit.is_some_and(|s| d >= s) {
                break;
            }
            join.next(self);
        }
        for a in opened.into_iter().rev() {
            self.up(a);
        }
        Ok(found)
    }
}

enum Node<'o> {
    Atom(usize),
    Oracle(OracleCursor<'o>),
    Union(Box<Union<'o>>),
}

impl Node<'_> {
    fn key(&self, ctx: &Ctx<'_>) -> i64 {
        match self {
            Node::Atom(a) => ctx.iters[*a].key(),
            Node::Oracle(c) => c.key(),
            Node::Union(u) => u.key,
        }
    }

    fn at_end(&self, ctx: &Ctx<'_>) -> bool {
        match self {
            Node::Atom(a) => ctx.iters[*a].at_end(),
            Node::Oracle(c) => c.at_end(),
            Node::Union(u) => u.end,
        }
    }

    fn next(&mut self, ctx: &mut Ctx<'_>) {
        match self {
            Node::Atom(a) => ctx.next(*a),
            Node::Oracle(c) => {
                ctx.ops += 1;
                c.next();
            }
            Node::Union(u) => u.next(ctx),
        }
    }

    fn seek(&mut self, ctx: &mut Ctx<'_>, k: i64) {
        match self {
            Node::Atom(a) => ctx.seek(*a, k),
            Node::Oracle(c) => {
                if c.key() < k {
                    ctx.ops += 1;
                    c.seek(k);
                }
            }
            Node::Union(u) => u.seek(ctx, k),
        }
    }
}

/// Leapfrog intersection over the participants of one depth.
struct Inter<'o> {
    kids: Vec<Node<'o>>,
    /// Cyclic order, fixed at init by initial keys.
    order: Vec<usize>,
    p: usize,
    key: i64,
    end: bool,
}

impl Inter<'_> {
    fn init(&mut self, ctx: &mut Ctx<'_>) {
        if self.kids.is_empty() || self.kids.iter().any(|k| k.at_end(ctx)) {
            self.end = true;
            return;
        }
        let kids = &self.kids;
        self.order.sort_by_key(|&i| kids[i].key(ctx));
        self.p = 0;
        self.search(ctx);
    }

    fn search(&mut self, ctx: &mut Ctx<'_>) {
        let n = self.kids.len();
        loop {
            let max = self.kids[self.order[(self.p + n - 1) % n]].key(ctx);
            let i = self.order[self.p];
            let k = self.kids[i].key(ctx);
            if k == max {
                self.key = k;
                return;
            }
            self.kids[i].seek(ctx, max);
            if self.kids[i].at_end(ctx) {
                self.end = true;
                return;
            }
            self.p = (self.p + 1) % n;
        }
    }

    /// Advance the participant written first in the body.
    fn next(&mut self, ctx: &mut Ctx<'_>) {
        if self.end {
            return;
        }
        self.kids[0].next(ctx);
        if self.kids[0].at_end(ctx) {
            self.end = true;
            return;
        }
        let at = self.order.iter().position(|&i| i == 0).unwrap();
        self.p = (at + 1) % self.kids.len();
        self.search(ctx);
    }

    fn seek(&mut self, ctx: &mut Ctx<'_>, k: i64) {
        if self.end || self.key >= k {
            return;
        }
        let i = self.order[self.p];
        self.kids[i].seek(ctx, k);
        if self.kids[i].at_end(ctx) {
            self.end = true;
            return;
        }
        self.p = (self.p + 1) % self.kids.len();
        self.search(ctx);
    }
}

/// Leapfrog union of per-branch intersections.
struct Union<'o> {
    id: usize,
    width: usize,
    branches: Vec<(usize, Inter<'o>)>,
    key: i64,
    end: bool,
}

impl Union<'_> {
    fn refresh(&mut self) {
        let live = self.branches.iter().filter(|(_, b)| !b.end).map(|(_, b)| b.key);
        match live.min() {
            Some(k) => {
                self.key = k;
                self.end = false;
            }
            None => self.end = true,
        }
    }

    fn next(&mut self, ctx: &mut Ctx<'_>) {
        if self.end {
            return;
        }
        let k = self.key;
        for (_, b) in &mut self.branches {
            if !b.end && b.key == k {
                b.next(ctx);
            }
        }
        self.refresh();
    }

    fn seek(&mut self, ctx: &mut Ctx<'_>, k: i64) {
        if self.end || self.key >= k {
            return;
        }
        for (_, b) in &mut self.branches {
            if !b.end && b.key < k {
                b.seek(ctx, k);
            }
        }
        self.refresh();
    }
}
