//! Key-order planning.
//!
//! Variables get slots: key variables first in key order (slot = depth),
//! then value variables. Every materialized atom is visited by a trie
//! iterator whose level `l` binds the variable at `depths[l]`.

use std::collections::{BTreeMap, BTreeSet};

use super::{classify_variables, is_projection_free, AggKind, AggSpec, Atom, AtomKind, Conj, Form, Rule, Term, VarClass};
use crate::error::{Error, Result};
use crate::key::Value;
use crate::store::Schema;

/// A slot reference or a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Operand {
    Slot(usize),
    Const(Value),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl PrimOp {
    fn parse(name: &str) -> Option<(PrimOp, bool)> {
        Some(match name {
            "add" => (PrimOp::Add, true),
            "sub" => (PrimOp::Sub, true),
            "mul" => (PrimOp::Mul, true),
            "lt" => (PrimOp::Lt, false),
            "le" => (PrimOp::Le, false),
            "gt" => (PrimOp::Gt, false),
            "ge" => (PrimOp::Ge, false),
            "eq" => (PrimOp::Eq, false),
            "ne" => (PrimOp::Ne, false),
            _ => return None,
        })
    }

    /// Integer arithmetic wraps; any float operand makes the result a float.
    pub fn compute(self, a: Value, b: Value) -> Value {
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => Value::Int(match self {
                PrimOp::Add => x.wrapping_add(y),
                PrimOp::Sub => x.wrapping_sub(y),
                PrimOp::Mul => x.wrapping_mul(y),
                _ => unreachable!("comparison used as a function"),
            }),
            _ => {
                let (x, y) = (a.as_f64(), b.as_f64());
                Value::Float(match self {
                    PrimOp::Add => x + y,
                    PrimOp::Sub => x - y,
                    PrimOp::Mul => x * y,
                    _ => unreachable!("comparison used as a function"),
                })
            }
        }
    }

    pub fn test(self, a: Value, b: Value) -> bool {
        match self {
            PrimOp::Lt => a < b,
            PrimOp::Le => a <= b,
            PrimOp::Gt => a > b,
            PrimOp::Ge => a >= b,
            PrimOp::Eq => a == b,
            PrimOp::Ne => a != b,
            _ => unreachable!("function used as a comparison"),
        }
    }
}

/// Work done right after a key variable is bound.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    /// Read the value column of a function atom positioned at full depth.
    /// `bind` is false when the slot is already bound and must match.
    Read { atom: usize, slot: usize, bind: bool },
    /// `out = op(a, b)` for arithmetic, or a test for comparisons.
    Prim { op: PrimOp, args: [Operand; 2], out: Option<Operand>, bind: bool },
}

/// A participant in the join at one depth.
#[derive(Clone, Debug, PartialEq)]
pub enum Part {
    Atom(usize),
    Union { id: usize, branches: Vec<Vec<Part>> },
}

#[derive(Clone, Debug)]
pub struct AtomPlan {
    pub pred: String,
    /// Iterator name used in traces and dumps; unique within the rule.
    pub label: String,
    pub schema: Schema,
    /// Depth bound by each key argument, strictly increasing.
    pub depths: Vec<usize>,
    pub value_slot: Option<usize>,
    /// Level needs no sensitivity index (args up to here are a key-order prefix).
    pub exempt: Vec<bool>,
    /// Sensitivity index exists for this level.
    pub indexed: Vec<bool>,
    /// Depths of the arguments before each level.
    pub alpha: Vec<Vec<usize>>,
    /// Other depths bound before each level, ascending.
    pub gamma: Vec<Vec<usize>>,
}

impl AtomPlan {
    pub fn level_of(&self, depth: usize) -> Option<usize> {
        self.depths.iter().position(|&d| d == depth)
    }

    /// Name of the sensitivity index at `level`, e.g. `H.z`.
    pub fn index_name(&self, level: usize, key_vars: &[String]) -> String {
        format!("{}.{}", self.label, key_vars[self.depths[level]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    Direct,
    Counted,
    ShortCircuit,
    Agg(AggKind),
}

#[derive(Clone, Debug)]
pub struct HeadPlan {
    pub pred: String,
    pub schema: Schema,
    pub kind: HeadKind,
    pub keys: Vec<Operand>,
    /// Head value for function heads; for aggregates the aggregated input
    /// (absent for count).
    pub value: Option<Operand>,
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub rule: Rule,
    pub key_vars: Vec<String>,
    pub value_vars: Vec<String>,
    pub atoms: Vec<AtomPlan>,
    /// Join participants per depth, in body order.
    pub levels: Vec<Vec<Part>>,
    /// Steps per depth, run after the depth's key is bound.
    pub steps: Vec<Vec<Step>>,
    pub heads: Vec<HeadPlan>,
    /// Number of leading key variables that determine the head when
    /// short-circuit evaluation is active.
    pub short_circuit: Option<usize>,
    pub unions: usize,
}

impl Plan {
    pub fn depth(&self) -> usize {
        self.key_vars.len()
    }

    pub fn slots(&self) -> usize {
        self.key_vars.len() + self.value_vars.len()
    }

    pub fn slot_name(&self, slot: usize) -> &str {
        if slot < self.key_vars.len() {
            &self.key_vars[slot]
        } else {
            &self.value_vars[slot - self.key_vars.len()]
        }
    }

    /// Every `(atom, level)` carrying a sensitivity index.
    pub fn indexed_levels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ap) in self.atoms.iter().enumerate() {
            for l in 0..ap.depths.len() {
                if ap.indexed[l] {
                    out.push((a, l));
                }
            }
        }
        out
    }

    pub fn index_names(&self) -> Vec<String> {
        self.indexed_levels().into_iter().map(|(a, l)| self.atoms[a].index_name(l, &self.key_vars)).collect()
    }

    /// Distinct body predicates.
    pub fn body_preds(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.pred.as_str()).collect()
    }

    /// Build a plan, resolving body predicates through `lookup`.
    pub fn new(rule: Rule, lookup: impl Fn(&str) -> Option<Schema>) -> Result<Plan> {
        Planner::default().plan(rule, &lookup)
    }
}

#[derive(Default)]
struct Planner {
    atoms: Vec<AtomPlan>,
    unions: usize,
}

fn vars_of(c: &Conj, keys_only: bool, out: &mut BTreeSet<String>) {
    for f in &c.forms {
        match f {
            Form::Atom(a) if a.is_materialized() => {
                out.extend(a.keys.iter().filter_map(Term::var).map(str::to_string));
                if !keys_only {
                    out.extend(a.value.iter().filter_map(Term::var).map(str::to_string));
                }
            }
            Form::Atom(a) => {
                if !keys_only {
                    out.extend(a.vars().map(str::to_string));
                }
            }
            Form::Disj(bs) => bs.iter().for_each(|b| vars_of(b, keys_only, out)),
            Form::Neg(n) => vars_of(n, keys_only, out),
        }
    }
}

fn check_branches(c: &Conj) -> Result<()> {
    for f in &c.forms {
        let Form::Disj(bs) = f else { continue };
        let sets: Vec<BTreeSet<String>> = bs
            .iter()
            .map(|b| {
                let mut s = BTreeSet::new();
                vars_of(b, true, &mut s);
                s
            })
            .collect();
        if sets.iter().any(|s| *s != sets[0]) {
            return Err(Error::Rule("disjunction branches must bind the same key variables".into()));
        }
        for b in bs {
            for a in b.atoms() {
                if a.kind != AtomKind::Relation {
                    return Err(Error::Unsupported(format!("{a} inside a disjunction; branches may only hold relation atoms")));
                }
            }
            check_branches(b)?;
        }
    }
    Ok(())
}

fn operand(t: &Term, slot: &BTreeMap<String, usize>) -> Operand {
    match t {
        Term::Var(v) => Operand::Slot(slot[v]),
        Term::Int(i) => Operand::Const(Value::Int(*i)),
        Term::Float(x) => Operand::Const(Value::Float(*x)),
    }
}

impl Planner {
    fn plan(mut self, rule: Rule, lookup: &dyn Fn(&str) -> Option<Schema>) -> Result<Plan> {
        if rule.has_negation() {
            return Err(Error::Unsupported("negation".into()));
        }
        let classes = classify_variables(&rule)?;
        check_branches(&rule.body)?;

        // Key order.
        let keys_in_body: Vec<String> = {
            let mut seen = Vec::new();
            for a in rule.body.atoms() {
                if a.is_materialized() {
                    for v in a.keys.iter().filter_map(Term::var) {
                        if !seen.iter().any(|s| s == v) {
                            seen.push(v.to_string());
                        }
                    }
                }
            }
            seen
        };
        let key_vars = match &rule.order {
            None => keys_in_body.clone(),
            Some(order) => {
                let mut seen = BTreeSet::new();
                for v in order {
                    match classes.get(v) {
                        None => return Err(Error::KeyOrder(format!("{v} does not occur in the body"))),
                        Some(VarClass::Value) => return Err(Error::KeyOrder(format!("{v} is a value variable"))),
                        Some(VarClass::Key) => {}
                    }
                    if !seen.insert(v.clone()) {
                        return Err(Error::KeyOrder(format!("{v} listed twice")));
                    }
                }
                if let Some(m) = keys_in_body.iter().find(|v| !seen.contains(*v)) {
                    return Err(Error::KeyOrder(format!("key variable {m} is missing")));
                }
                order.clone()
            }
        };
        if key_vars.is_empty() {
            return Err(Error::Rule("body has no key variables".into()));
        }
        let value_vars: Vec<String> = classes
            .iter()
            .filter(|(_, c)| **c == VarClass::Value)
            .map(|(v, _)| v.clone())
            .collect();
        let mut slot: BTreeMap<String, usize> = BTreeMap::new();
        for (i, v) in key_vars.iter().chain(&value_vars).enumerate() {
            slot.insert(v.clone(), i);
        }
        let nkeys = key_vars.len();

        // Materialized atoms.
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        for a in rule.body.atoms().into_iter().filter(|a| a.is_materialized()) {
            let schema = lookup(&a.pred).ok_or_else(|| Error::UnknownPredicate(a.pred.clone()))?;
            self.add_atom(a, schema, &slot, nkeys, rule.force_sens, &mut labels)?;
        }

        // Join participants per depth.
        let mut next_atom = 0;
        let body_parts = self.parts(&rule.body, &mut next_atom);
        let levels: Vec<Vec<Part>> = (0..nkeys).map(|d| self.parts_at(&body_parts, d)).collect();
        for (d, parts) in levels.iter().enumerate() {
            if parts.is_empty() {
                return Err(Error::Rule(format!("no atom binds {}", key_vars[d])));
            }
        }

        let steps = self.schedule(&rule, &slot, nkeys)?;
        let heads = plan_heads(&rule, &classes, &slot, nkeys, lookup)?;
        let short_circuit = plan_short_circuit(&rule, &heads, &steps, nkeys)?;
        Ok(Plan {
            rule,
            key_vars,
            value_vars,
            atoms: self.atoms,
            levels,
            steps,
            heads,
            short_circuit,
            unions: self.unions,
        })
    }

    fn add_atom(
        &mut self,
        a: &Atom,
        schema: Schema,
        slot: &BTreeMap<String, usize>,
        nkeys: usize,
        force: bool,
        labels: &mut BTreeMap<String, usize>,
    ) -> Result<()> {
        let want_fn = a.kind == AtomKind::Function;
        if schema.functional != want_fn {
            let shape = if schema.functional { "a function" } else { "a relation" };
            return Err(Error::Type(format!("{} is {shape}; written as {a}", a.pred)));
        }
        if schema.arity != a.keys.len() {
            return Err(Error::Arity { relation: a.pred.clone(), expected: schema.arity, got: a.keys.len() });
        }
        let mut depths = Vec::new();
        for t in &a.keys {
            let Term::Var(v) = t else {
                return Err(Error::Unsupported(format!("constant argument in {a}")));
            };
            let d = slot[v];
            if depths.contains(&d) {
                return Err(Error::Unsupported(format!("variable {v} repeated in {a}")));
            }
            if depths.last().is_some_and(|&p| p > d) {
                return Err(Error::KeyOrder(format!("arguments of {a} are not in key order")));
            }
            depths.push(d);
        }
        let value_slot = match &a.value {
            None => None,
            Some(Term::Var(v)) => {
                let s = slot[v];
                if s < nkeys {
                    return Err(Error::Unsupported(format!("value {v} of {a} is also a key variable")));
                }
                Some(s)
            }
            Some(_) => return Err(Error::Unsupported(format!("constant value in {a}"))),
        };
        let n = labels.entry(a.pred.clone()).or_default();
        *n += 1;
        let label = if *n == 1 { a.pred.clone() } else { format!("{}#{}", a.pred, n) };
        let exempt: Vec<bool> = (0..depths.len()).map(|l| depths[..=l].iter().enumerate().all(|(i, &d)| i == d)).collect();
        let indexed = exempt.iter().map(|&e| force || !e).collect();
        let alpha = (0..depths.len()).map(|l| depths[..l].to_vec()).collect();
        let gamma = (0..depths.len())
            .map(|l| (0..depths[l]).filter(|d| !depths[..l].contains(d)).collect())
            .collect();
        self.atoms.push(AtomPlan { pred: a.pred.clone(), label, schema, depths, value_slot, exempt, indexed, alpha, gamma });
        Ok(())
    }

    /// Parts for a conjunction over all depths; atoms numbered in the
    /// same walk order as `add_atom`.
    fn parts(&mut self, c: &Conj, next: &mut usize) -> Vec<Part> {
        let mut out = Vec::new();
        for f in &c.forms {
            match f {
                Form::Atom(a) if a.is_materialized() => {
                    out.push(Part::Atom(*next));
                    *next += 1;
                }
                Form::Atom(_) | Form::Neg(_) => {}
                Form::Disj(bs) => {
                    let id = self.unions;
                    self.unions += 1;
                    let branches = bs.iter().map(|b| self.parts(b, next)).collect();
                    out.push(Part::Union { id, branches });
                }
            }
        }
        out
    }

    fn parts_at(&self, parts: &[Part], d: usize) -> Vec<Part> {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Part::Atom(a) => {
                    if self.atoms[*a].depths.contains(&d) {
                        out.push(p.clone());
                    }
                }
                Part::Union { id, branches } => {
                    let bs: Vec<Vec<Part>> = branches.iter().map(|b| self.parts_at(b, d)).collect();
                    if bs.iter().any(|b| !b.is_empty()) {
                        out.push(Part::Union { id: *id, branches: bs });
                    }
                }
            }
        }
        out
    }

    fn schedule(&self, rule: &Rule, slot: &BTreeMap<String, usize>, nkeys: usize) -> Result<Vec<Vec<Step>>> {
        let mut bound = vec![false; slot.len()];
        let mut steps = vec![Vec::new(); nkeys];
        let prims: Vec<&Atom> = rule.body.atoms().into_iter().filter(|a| !a.is_materialized()).collect();
        let mut done = vec![false; prims.len()];
        let is_bound = |t: &Term, bound: &[bool]| t.var().is_none_or(|v| bound[slot[v]]);
        for d in 0..nkeys {
            bound[d] = true;
            for (i, a) in self.atoms.iter().enumerate() {
                if let (Some(s), Some(&last)) = (a.value_slot, a.depths.last()) {
                    if last == d {
                        steps[d].push(Step::Read { atom: i, slot: s, bind: !bound[s] });
                        bound[s] = true;
                    }
                }
            }
            loop {
                let mut progress = false;
                for (i, p) in prims.iter().enumerate() {
                    if done[i] || !p.keys.iter().all(|t| is_bound(t, &bound)) {
                        continue;
                    }
                    let (op, functional) = PrimOp::parse(&p.pred).expect("primitive name");
                    if functional != p.value.is_some() || p.keys.len() != 2 {
                        let shape = if functional { "[a,b]=c" } else { "(a,b)" };
                        return Err(Error::Rule(format!("{p} must be written {}{shape}", p.pred)));
                    }
                    let out = p.value.as_ref().map(|t| operand(t, slot));
                    let mut bind = false;
                    if let Some(t) = &p.value {
                        match t.var() {
                            Some(v) if !bound[slot[v]] => {
                                if slot[v] < nkeys {
                                    // Key outputs are checked once the join binds them.
                                    continue;
                                }
                                bound[slot[v]] = true;
                                bind = true;
                            }
                            _ => {}
                        }
                    }
                    let args = [operand(&p.keys[0], slot), operand(&p.keys[1], slot)];
                    steps[d].push(Step::Prim { op, args, out, bind });
                    done[i] = true;
                    progress = true;
                }
                if !progress {
                    break;
                }
            }
        }
        if let Some(i) = done.iter().position(|d| !d) {
            return Err(Error::Rule(format!("inputs of {} are never bound", prims[i])));
        }
        Ok(steps)
    }
}

fn plan_heads(
    rule: &Rule,
    classes: &BTreeMap<String, VarClass>,
    slot: &BTreeMap<String, usize>,
    nkeys: usize,
    lookup: &dyn Fn(&str) -> Option<Schema>,
) -> Result<Vec<HeadPlan>> {
    let projection_free = is_projection_free(rule, classes);
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for h in &rule.heads {
        if !names.insert(h.pred.as_str()) {
            return Err(Error::Rule(format!("head {} appears twice", h.pred)));
        }
        if rule.body.atoms().iter().any(|a| a.pred == h.pred) {
            return Err(Error::Unsupported(format!("recursive rule on {}", h.pred)));
        }
        if lookup(&h.pred).is_some() {
            return Err(Error::Rule(format!("head {} is already a stored relation", h.pred)));
        }
        let functional = h.kind == AtomKind::Function;
        let schema = if functional { Schema::function(&h.pred, h.keys.len()) } else { Schema::relation(&h.pred, h.keys.len()) };
        let keys = h.keys.iter().map(|t| operand(t, slot)).collect::<Vec<_>>();
        let (kind, value) = match &rule.agg {
            Some(AggSpec { kind, input, output }) => {
                if rule.heads.len() != 1 || !functional || h.value.as_ref().and_then(Term::var) != Some(output.as_str()) {
                    return Err(Error::Rule(format!("aggregate rules need a single head of the form {}[..]={output}", h.pred)));
                }
                for t in &h.keys {
                    match t.var() {
                        Some(v) if slot[v] < nkeys => {}
                        _ => return Err(Error::Rule(format!("group argument {t} must be a key variable"))),
                    }
                }
                (HeadKind::Agg(*kind), input.as_ref().map(|v| Operand::Slot(slot[v])))
            }
            None => {
                let kind = if projection_free {
                    HeadKind::Direct
                } else if rule.short_circuit {
                    HeadKind::ShortCircuit
                } else {
                    HeadKind::Counted
                };
                (kind, h.value.as_ref().map(|t| operand(t, slot)))
            }
        };
        out.push(HeadPlan { pred: h.pred.clone(), schema, kind, keys, value });
    }
    Ok(out)
}

fn plan_short_circuit(rule: &Rule, heads: &[HeadPlan], steps: &[Vec<Step>], nkeys: usize) -> Result<Option<usize>> {
    if !heads.iter().any(|h| h.kind == HeadKind::ShortCircuit) {
        return Ok(None);
    }
    let mut key_slots = BTreeSet::new();
    let mut value_slots = BTreeSet::new();
    for h in heads {
        for o in h.keys.iter().chain(h.value.iter()) {
            if let Operand::Slot(s) = o {
                if *s < nkeys {
                    key_slots.insert(*s);
                } else {
                    value_slots.insert(*s);
                }
            }
        }
    }
    let s = key_slots.len();
    if s == 0 || key_slots.iter().copied().ne(0..s) {
        return Err(Error::Rule(format!(
            "short-circuit needs the head's key variables first in the key order: {}",
            rule.heads.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(", ")
        )));
    }
    for (d, ss) in steps.iter().enumerate() {
        for st in ss {
            let bound = match st {
                Step::Read { slot, bind: true, .. } => Some(*slot),
                Step::Prim { out: Some(Operand::Slot(o)), bind: true, .. } => Some(*o),
                _ => None,
            };
            if let Some(b) = bound {
                if value_slots.contains(&b) && d >= s {
                    return Err(Error::Rule("short-circuit needs head values bound by the head's key variables".into()));
                }
            }
        }
    }
    Ok(Some(s))
}
