//! Rules: internal representation, variable classification and planning.
//!
//! A rule is held in quantified form: head variables are universal and
//! every body-only variable belongs to the innermost conjunction that
//! covers all of its uses.

mod parse;
mod plan;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parse::parse_rule;
pub use plan::{AtomPlan, HeadKind, HeadPlan, Operand, Part, Plan, PrimOp, Step};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(String),
    Int(i64),
    Float(f64),
}

impl Term {
    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Int(i) => write!(f, "{i}"),
            Term::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomKind {
    Relation,
    Function,
    Primitive,
}

/// `R(k..)`, `F[k..]=v`, or a primitive such as `add[a,b]=c` / `lt(a,b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub pred: String,
    pub kind: AtomKind,
    pub keys: Vec<Term>,
    pub value: Option<Term>,
}

pub const PRIMITIVES: &[&str] = &["add", "sub", "mul", "lt", "le", "gt", "ge", "eq", "ne"];

impl Atom {
    pub fn is_materialized(&self) -> bool {
        self.kind != AtomKind::Primitive
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.keys.iter().chain(self.value.iter()).filter_map(Term::var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.keys.iter().map(|t| t.to_string()).collect();
        match &self.value {
            None => write!(f, "{}({})", self.pred, args.join(",")),
            Some(v) => write!(f, "{}[{}]={}", self.pred, args.join(","), v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    Atom(Atom),
    Disj(Vec<Conj>),
    Neg(Box<Conj>),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Conj {
    pub existentials: Vec<String>,
    pub forms: Vec<Form>,
}

impl Conj {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for f in &self.forms {
            match f {
                Form::Atom(a) => out.extend(a.vars().map(str::to_string)),
                Form::Disj(bs) => bs.iter().for_each(|b| b.collect_vars(out)),
                Form::Neg(c) => c.collect_vars(out),
            }
        }
    }

    /// Every atom, depth first in written order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(c: &'a Conj, out: &mut Vec<&'a Atom>) {
            for f in &c.forms {
                match f {
                    Form::Atom(a) => out.push(a),
                    Form::Disj(bs) => bs.iter().for_each(|b| walk(b, out)),
                    Form::Neg(c) => walk(c, out),
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Place every variable not in `outer` at the innermost conjunction
    /// that covers all of its uses.
    fn scope(&mut self, outer: &BTreeSet<String>) {
        // Variables used directly here, or by more than one child form.
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut direct = BTreeSet::new();
        for f in &self.forms {
            let mut vs = BTreeSet::new();
            match f {
                Form::Atom(a) => {
                    direct.extend(a.vars().map(str::to_string));
                }
                Form::Disj(bs) => bs.iter().for_each(|b| b.collect_vars(&mut vs)),
                Form::Neg(c) => c.collect_vars(&mut vs),
            }
            for v in vs {
                *counts.entry(v).or_default() += 1;
            }
        }
        let mine: BTreeSet<String> = direct
            .into_iter()
            .chain(counts.into_iter().filter(|(_, n)| *n > 1).map(|(v, _)| v))
            .filter(|v| !outer.contains(v))
            .collect();
        self.existentials = mine.iter().cloned().collect();
        let inner: BTreeSet<String> = outer.union(&mine).cloned().collect();
        for f in &mut self.forms {
            match f {
                Form::Atom(_) => {}
                Form::Disj(bs) => bs.iter_mut().for_each(|b| b.scope(&inner)),
                Form::Neg(c) => c.scope(&inner),
            }
        }
    }
}

impl fmt::Display for Conj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.existentials.is_empty() {
            write!(f, "exists {} . ", self.existentials.join(","))?;
        }
        for (i, form) in self.forms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match form {
                Form::Atom(a) => write!(f, "{a}")?,
                Form::Disj(bs) => {
                    let parts: Vec<String> = bs.iter().map(|b| b.to_string()).collect();
                    write!(f, "({})", parts.join(" ; "))?;
                }
                Form::Neg(c) => write!(f, "!({c})")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggKind {
    Count,
    GroupSum,
    Min,
    Max,
    FloatTotal,
}

impl AggKind {
    pub fn name(self) -> &'static str {
        match self {
            AggKind::Count => "count",
            AggKind::GroupSum => "sum",
            AggKind::Min => "min",
            AggKind::Max => "max",
            AggKind::FloatTotal => "total",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggSpec {
    pub kind: AggKind,
    pub input: Option<String>,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub universals: Vec<String>,
    pub heads: Vec<Atom>,
    pub agg: Option<AggSpec>,
    pub body: Conj,
    /// Key variable order; first occurrence order when absent.
    pub order: Option<Vec<String>>,
    /// Record sensitivities even where the prefix rule would skip them.
    pub force_sens: bool,
    /// Stop after the first witness of each head binding.
    pub short_circuit: bool,
}

impl Rule {
    pub fn new(heads: Vec<Atom>, agg: Option<AggSpec>, body: Conj) -> Self {
        let mut r = Rule {
            universals: Vec::new(),
            heads,
            agg,
            body,
            order: None,
            force_sens: false,
            short_circuit: false,
        };
        r.scope();
        r
    }

    fn scope(&mut self) {
        let mut head_vars = Vec::new();
        for h in &self.heads {
            for v in h.vars() {
                if !head_vars.iter().any(|x| x == v) {
                    head_vars.push(v.to_string());
                }
            }
        }
        // The aggregate output is produced by the aggregation, not the body.
        if let Some(a) = &self.agg {
            head_vars.retain(|v| *v != a.output);
        }
        self.universals = head_vars;
        let mut outer: BTreeSet<String> = self.universals.iter().cloned().collect();
        if let Some(a) = &self.agg {
            outer.insert(a.output.clone());
        }
        self.body.scope(&outer);
    }

    pub fn has_negation(&self) -> bool {
        fn walk(c: &Conj) -> bool {
            c.forms.iter().any(|f| match f {
                Form::Neg(_) => true,
                Form::Disj(bs) => bs.iter().any(walk),
                Form::Atom(_) => false,
            })
        }
        walk(&self.body)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.universals.is_empty() {
            write!(f, "forall {} . ", self.universals.join(","))?;
        }
        let heads: Vec<String> = self.heads.iter().map(|h| h.to_string()).collect();
        write!(f, "{} <- ", heads.join(", "))?;
        if let Some(a) = &self.agg {
            write!(f, "agg<< {}={}({}) >> ", a.output, a.kind.name(), a.input.as_deref().unwrap_or(""))?;
        }
        write!(f, "{}.", self.body)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarClass {
    Key,
    Value,
}

/// A variable is a key when it occurs in key position of some
/// materialized body atom, and a value otherwise.
pub fn classify_variables(rule: &Rule) -> Result<BTreeMap<String, VarClass>> {
    let mut out = BTreeMap::new();
    for a in rule.body.atoms() {
        for v in a.vars() {
            out.entry(v.to_string()).or_insert(VarClass::Value);
        }
        if a.is_materialized() {
            for v in a.keys.iter().filter_map(Term::var) {
                out.insert(v.to_string(), VarClass::Key);
            }
        }
    }
    for h in &rule.heads {
        for v in h.vars() {
            let is_output = rule.agg.as_ref().is_some_and(|a| a.output == v);
            if !is_output && !out.contains_key(v) {
                return Err(Error::Rule(format!("variable {v} in head {h} does not occur in the body")));
            }
        }
    }
    if let Some(a) = &rule.agg {
        if let Some(i) = &a.input {
            if !out.contains_key(i) {
                return Err(Error::Rule(format!("aggregated variable {i} does not occur in the body")));
            }
        }
        if out.contains_key(&a.output) {
            return Err(Error::Rule(format!("aggregate output {} also occurs in the body", a.output)));
        }
    }
    Ok(out)
}

/// True when every head atom mentions every key variable.
pub fn is_projection_free(rule: &Rule, classes: &BTreeMap<String, VarClass>) -> bool {
    rule.heads.iter().all(|h| {
        let vs: BTreeSet<&str> = h.vars().collect();
        classes
            .iter()
            .filter(|(_, c)| **c == VarClass::Key)
            .all(|(v, _)| vs.contains(v.as_str()))
    })
}
