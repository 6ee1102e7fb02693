//! Rule shapes, random instances and edits shared by the integration and
//! acceptance tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lftj_ivm::maintain::RuleEngine;
use lftj_ivm::rule::{parse_rule, Plan};
use lftj_ivm::store::{RelationVersion, Schema};
use lftj_ivm::{Tuple, Value};
use rand::rngs::StdRng;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Values {
    None,
    Int,
    /// Doubles of widely varying magnitude.
    Float,
}

#[derive(Clone, Debug)]
pub struct RelSpec {
    pub name: &'static str,
    pub arity: usize,
    pub values: Values,
    /// Keys are drawn from `0..domain`.
    pub domain: i64,
    pub initial: usize,
}

pub struct Shape {
    pub name: &'static str,
    pub rule: &'static str,
    pub rels: Vec<RelSpec>,
    /// Brute-force head contents, rendered like `HeadState::render(true)`.
    pub brute: Option<BruteFn>,
}

const fn rel(name: &'static str, arity: usize, domain: i64, initial: usize) -> RelSpec {
    RelSpec { name, arity, values: Values::None, domain, initial }
}

const fn fun(name: &'static str, arity: usize, values: Values, domain: i64, initial: usize) -> RelSpec {
    RelSpec { name, arity, values, domain, initial }
}

pub type BruteFn = fn(&Catalog) -> BTreeMap<String, String>;
pub type Catalog = BTreeMap<String, RelationVersion>;

fn keys(cat: &Catalog, name: &str) -> BTreeSet<Vec<i64>> {
    cat[name].tuples().into_iter().map(|t| t.keys).collect()
}

fn vals(cat: &Catalog, name: &str) -> Vec<(Vec<i64>, Value)> {
    cat[name].tuples().into_iter().map(|t| (t.keys, t.value.unwrap())).collect()
}

fn render_set(rows: impl IntoIterator<Item = Vec<i64>>) -> String {
    rows.into_iter().map(|r| r.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("\t") + "\n").collect()
}

fn render_counted(rows: &BTreeMap<Vec<i64>, (String, u64)>) -> String {
    let mut out = String::new();
    for (k, (v, eta)) in rows {
        let mut cols: Vec<String> = k.iter().map(|x| x.to_string()).collect();
        if !v.is_empty() {
            cols.push(v.clone());
        }
        out += &format!("{}\t#{eta}\n", cols.join("\t"));
    }
    out
}

fn one(name: &str, text: String) -> BTreeMap<String, String> {
    BTreeMap::from([(name.to_string(), text)])
}

fn brute_unary(cat: &Catalog) -> BTreeMap<String, String> {
    let a = keys(cat, "A");
    let b = keys(cat, "B");
    one("C", render_set(a.intersection(&b).cloned()))
}

fn brute_ghi(cat: &Catalog, with_r: bool) -> BTreeMap<String, String> {
    let (g, h, i) = (keys(cat, "G"), keys(cat, "H"), keys(cat, "I"));
    let r = if with_r { keys(cat, "R") } else { BTreeSet::new() };
    let mut f: BTreeMap<Vec<i64>, (String, u64)> = BTreeMap::new();
    for gx in &g {
        for hy in &h {
            let (x, z, y) = (gx[0], gx[1], hy[0]);
            if hy[1] != z || !i.contains(&vec![x, y, z]) || (with_r && !r.contains(&vec![z])) {
                continue;
            }
            f.entry(vec![x, y]).or_insert((String::new(), 0)).1 += 1;
        }
    }
    one("F", render_counted(&f))
}

fn brute_path(cat: &Catalog) -> BTreeMap<String, String> {
    let (g, h) = (keys(cat, "G"), keys(cat, "H"));
    let mut s: BTreeMap<Vec<i64>, (String, u64)> = BTreeMap::new();
    for a in &g {
        for b in &h {
            if a[1] == b[0] {
                s.entry(vec![a[0], b[1]]).or_insert((String::new(), 0)).1 += 1;
            }
        }
    }
    one("S", render_counted(&s))
}

fn brute_semijoin(cat: &Catalog) -> BTreeMap<String, String> {
    let (g, h) = (keys(cat, "G"), keys(cat, "H"));
    let ys: BTreeSet<i64> = h.iter().map(|r| r[0]).collect();
    one("S", render_set(g.into_iter().filter(|r| ys.contains(&r[1]))))
}

fn brute_count(cat: &Catalog) -> BTreeMap<String, String> {
    let mut d: BTreeMap<Vec<i64>, (String, u64)> = BTreeMap::new();
    for r in keys(cat, "G") {
        d.entry(vec![r[0]]).or_insert((String::new(), 0)).1 += 1;
    }
    for (v, eta) in d.values_mut() {
        *v = eta.to_string();
    }
    one("D", render_counted(&d))
}

fn brute_sum(cat: &Catalog) -> BTreeMap<String, String> {
    let mut acc: BTreeMap<Vec<i64>, (i64, u64)> = BTreeMap::new();
    for (k, v) in vals(cat, "W") {
        let e = acc.entry(vec![k[1]]).or_insert((0, 0));
        e.0 += v.as_int().unwrap();
        e.1 += 1;
    }
    let d = acc.into_iter().map(|(k, (s, n))| (k, (s.to_string(), n))).collect();
    one("D", render_counted(&d))
}

fn brute_extreme(cat: &Catalog, max: bool) -> BTreeMap<String, String> {
    let mut acc: BTreeMap<i64, Value> = BTreeMap::new();
    for (k, v) in vals(cat, "W") {
        let e = acc.entry(k[0]).or_insert(v);
        *e = if max { (*e).max(v) } else { (*e).min(v) };
    }
    one("M", acc.into_iter().map(|(k, v)| format!("{k}\t{v}\n")).collect())
}

fn brute_join_add(cat: &Catalog) -> BTreeMap<String, String> {
    let p: BTreeMap<i64, i64> = vals(cat, "P").into_iter().map(|(k, v)| (k[0], v.as_int().unwrap())).collect();
    let q: BTreeMap<i64, i64> = vals(cat, "Q").into_iter().map(|(k, v)| (k[0], v.as_int().unwrap())).collect();
    let rows = p.iter().filter_map(|(k, a)| q.get(k).map(|b| format!("{k}\t{}\n", a.wrapping_add(*b)))).collect();
    one("C", rows)
}

fn brute_union(cat: &Catalog) -> BTreeMap<String, String> {
    let (a, b, c) = (keys(cat, "A"), keys(cat, "B"), keys(cat, "U"));
    one("V", render_set(a.union(&b).filter(|x| c.contains(*x)).cloned()))
}

/// Shapes exercised by the correctness workloads.
pub fn shapes() -> Vec<Shape> {
    vec![
        Shape {
            name: "unary intersection",
            rule: "C(x) <- A(x), B(x). @force_sens",
            rels: vec![rel("A", 1, 60, 30), rel("B", 1, 60, 30)],
            brute: Some(brute_unary),
        },
        Shape {
            name: "unary intersection, elided indices",
            rule: "C(x) <- A(x), B(x).",
            rels: vec![rel("A", 1, 60, 30), rel("B", 1, 60, 30)],
            brute: Some(brute_unary),
        },
        Shape {
            name: "F <- G,H,I",
            rule: "F(x,y) <- G(x,z), H(y,z), I(x,y,z). @order(x,y,z)",
            rels: vec![rel("G", 2, 8, 30), rel("H", 2, 8, 30), rel("I", 3, 8, 120)],
            brute: Some(|c| brute_ghi(c, false)),
        },
        Shape {
            name: "F <- G,H,I,R",
            rule: "F(x,y) <- G(x,z), H(y,z), I(x,y,z), R(z). @order(x,y,z)",
            rels: vec![rel("G", 2, 8, 30), rel("H", 2, 8, 30), rel("I", 3, 8, 120), rel("R", 1, 8, 5)],
            brute: Some(|c| brute_ghi(c, true)),
        },
        Shape {
            name: "counted projection",
            rule: "S(x,z) <- G(x,y), H(y,z).",
            rels: vec![rel("G", 2, 10, 35), rel("H", 2, 10, 35)],
            brute: Some(brute_path),
        },
        Shape {
            name: "short-circuit projection",
            rule: "S(x,y) <- G(x,y), H(y,z). @short_circuit",
            rels: vec![rel("G", 2, 10, 35), rel("H", 2, 10, 25)],
            brute: Some(brute_semijoin),
        },
        Shape {
            name: "count",
            rule: "D[x]=n <- agg<< n=count() >> G(x,y).",
            rels: vec![rel("G", 2, 10, 40)],
            brute: Some(brute_count),
        },
        Shape {
            name: "sum",
            rule: "D[y]=n <- agg<< n=sum(v) >> W[x,y]=v.",
            rels: vec![fun("W", 2, Values::Int, 10, 40)],
            brute: Some(brute_sum),
        },
        Shape {
            name: "min",
            rule: "M[x]=m <- agg<< m=min(v) >> W[x,y]=v.",
            rels: vec![fun("W", 2, Values::Int, 10, 40)],
            brute: Some(|c| brute_extreme(c, false)),
        },
        Shape {
            name: "max",
            rule: "M[x]=m <- agg<< m=max(v) >> W[x,y]=v.",
            rels: vec![fun("W", 2, Values::Int, 10, 40)],
            brute: Some(|c| brute_extreme(c, true)),
        },
        Shape {
            name: "float total",
            rule: "T[x]=t <- agg<< t=total(v) >> W[x,y]=v.",
            rels: vec![fun("W", 2, Values::Float, 6, 30)],
            brute: None,
        },
        Shape {
            name: "functions with arithmetic",
            rule: "C[x]=r <- P[x]=a, Q[x]=b, add[a,b]=r.",
            rels: vec![fun("P", 1, Values::Int, 30, 15), fun("Q", 1, Values::Int, 30, 15)],
            brute: Some(brute_join_add),
        },
        Shape {
            name: "disjunction",
            rule: "V(x) <- (A(x) ; B(x)), U(x). @force_sens",
            rels: vec![rel("A", 1, 40, 12), rel("B", 1, 40, 12), rel("U", 1, 40, 20)],
            brute: Some(brute_union),
        },
    ]
}

/// The correctness criterion's required shapes, by name.
pub const REQUIRED: &[&str] = &[
    "unary intersection",
    "F <- G,H,I",
    "F <- G,H,I,R",
    "counted projection",
    "count",
    "sum",
    "min",
    "max",
    "float total",
];

pub fn random_value(rng: &mut StdRng, kind: Values) -> Option<Value> {
    match kind {
        Values::None => None,
        Values::Int => Some(Value::Int(rng.gen_range(-20..20))),
        Values::Float => {
            let m: f64 = rng.gen_range(-1.0..1.0);
            Some(Value::Float(m * 2f64.powi(rng.gen_range(-60..60))))
        }
    }
}

fn random_keys(rng: &mut StdRng, r: &RelSpec) -> Vec<i64> {
    (0..r.arity).map(|_| rng.gen_range(0..r.domain)).collect()
}

pub fn schema(r: &RelSpec) -> Schema {
    if r.values == Values::None {
        Schema::relation(r.name, r.arity)
    } else {
        Schema::function(r.name, r.arity)
    }
}

/// A random instance; `scale` multiplies the initial sizes.
pub fn random_catalog(rng: &mut StdRng, rels: &[RelSpec], page: usize) -> Catalog {
    let mut cat = Catalog::new();
    for r in rels {
        let mut rows: BTreeMap<Vec<i64>, Option<Value>> = BTreeMap::new();
        for _ in 0..r.initial {
            rows.insert(random_keys(rng, r), random_value(rng, r.values));
        }
        let tuples = rows.into_iter().map(|(keys, value)| Tuple { keys, value });
        cat.insert(r.name.to_string(), RelationVersion::from_tuples(schema(r), page, tuples).unwrap());
    }
    cat
}

/// Apply `n` random single-record edits spread over the relations. Each
/// edit erases a present record, inserts an absent one, or for functions
/// replaces a value.
pub fn random_edits(rng: &mut StdRng, rels: &[RelSpec], cat: &Catalog, n: usize) -> Catalog {
    let mut out = cat.clone();
    for _ in 0..n {
        let r = &rels[rng.gen_range(0..rels.len())];
        let v = &out[r.name];
        let mut txn = v.begin();
        if rng.gen_bool(0.5) && !v.is_empty() {
            let all = v.tuples();
            let t = all[rng.gen_range(0..all.len())].clone();
            txn.erase(&t).unwrap();
            if r.values != Values::None && rng.gen_bool(0.5) {
                txn.insert(Tuple { keys: t.keys, value: random_value(rng, r.values) }).unwrap();
            }
        } else {
            let keys = (0..10).map(|_| random_keys(rng, r)).find(|k| txn.get(k).is_none());
            if let Some(keys) = keys {
                txn.insert(Tuple { keys, value: random_value(rng, r.values) }).unwrap();
            }
        }
        out.insert(r.name.to_string(), txn.commit());
    }
    out
}

pub fn plan(rule: &str, cat: &Catalog) -> Plan {
    Plan::new(parse_rule(rule).unwrap(), |n| cat.get(n).map(|v| v.schema().clone())).unwrap()
}

/// Body versions in atom order.
pub fn inputs(plan: &Plan, cat: &Catalog) -> Vec<RelationVersion> {
    plan.atoms.iter().map(|a| cat[&a.pred].clone()).collect()
}

pub fn heads(e: &RuleEngine) -> BTreeMap<String, String> {
    e.heads().iter().map(|h| (h.name().to_string(), h.render(true))).collect()
}

pub fn bootstrap(rule: &str, cat: &Catalog) -> RuleEngine {
    let p = plan(rule, cat);
    let mut e = RuleEngine::new(p);
    let ins = inputs(e.plan(), cat);
    e.bootstrap(ins).unwrap();
    e
}

#[derive(Debug, Default)]
pub struct WorkloadResult {
    pub rounds: usize,
    pub mismatches: Vec<String>,
    pub soundness_mismatches: Vec<String>,
}

/// Random edit rounds: maintained heads against a fresh bootstrap, the
/// brute-force oracle when the shape has one, and a second engine
/// maintained without the oracle.
pub fn run_workload(shape: &Shape, rng: &mut StdRng, rounds: usize) -> WorkloadResult {
    let mut cat = random_catalog(rng, &shape.rels, 8);
    let mut e = bootstrap(shape.rule, &cat);
    let mut plain = bootstrap(shape.rule, &cat);
    let mut res = WorkloadResult::default();
    for round in 0..rounds {
        let n = if rng.gen_bool(0.6) { 1 } else { rng.gen_range(0..5) };
        cat = random_edits(rng, &shape.rels, &cat, n);
        let ins = inputs(e.plan(), &cat);
        e.maintain(ins.clone(), true).unwrap_or_else(|err| panic!("{}: round {round}: {err}", shape.name));
        plain.maintain(ins, false).unwrap();
        let got = heads(&e);
        let fresh = heads(&bootstrap(shape.rule, &cat));
        if got != fresh {
            res.mismatches.push(format!("round {round}: maintained {got:?} fresh {fresh:?}"));
        }
        if let Some(brute) = shape.brute {
            let want = brute(&cat);
            if fresh != want {
                res.mismatches.push(format!("round {round}: bootstrap {fresh:?} brute force {want:?}"));
            }
        }
        if heads(&plain) != got {
            res.soundness_mismatches.push(format!("round {round}: oracle {got:?} no oracle {:?}", heads(&plain)));
        }
        res.rounds += 1;
    }
    res
}

/// Assignments of a full evaluation, projected the way the heads see
/// them under short-circuit evaluation.
pub fn assignment_set(plan: &Plan, versions: &[RelationVersion]) -> BTreeSet<lftj_ivm::lftj::Assignment> {
    let out = lftj_ivm::lftj::evaluate(plan, versions, Default::default()).unwrap();
    out.assignments
        .into_iter()
        .map(|mut a| {
            if let Some(s) = plan.short_circuit {
                a.keys[s..].iter_mut().for_each(|k| *k = 0);
                a.values.clear();
            }
            a
        })
        .collect()
}

/// The same relations capped at `max` initial records each.
pub fn capped(rels: &[RelSpec], max: usize) -> Vec<RelSpec> {
    rels.iter().map(|r| RelSpec { initial: r.initial.min(max), ..r.clone() }).collect()
}
