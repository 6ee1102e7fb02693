//! A three-way join over binary and ternary relations, maintained under
//! random single-record edits. Compares maintenance cost with a full
//! re-evaluation.

use std::collections::BTreeMap;

use lftj_ivm::lftj::{evaluate, EvalOptions};
use lftj_ivm::maintain::RuleEngine;
use lftj_ivm::rule::parse_rule;
use lftj_ivm::rule::Plan;
use lftj_ivm::store::{RelationVersion, Schema};
use lftj_ivm::Tuple;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> lftj_ivm::Result<()> {
    let mut rng = StdRng::seed_from_u64(1);
    let arity = BTreeMap::from([("G", 2), ("H", 2), ("I", 3)]);
    let size = BTreeMap::from([("G", 5000), ("H", 5000), ("I", 20_000)]);
    let mut cat: BTreeMap<&str, RelationVersion> = BTreeMap::new();
    for (&name, &k) in &arity {
        let rows = (0..size[name]).map(|_| Tuple::new((0..k).map(|_| rng.gen_range(0..100)).collect::<Vec<i64>>()));
        let mut txn = RelationVersion::empty(Schema::relation(name, k)).begin();
        for t in rows {
            txn.insert(t)?;
        }
        cat.insert(name, txn.commit());
    }

    let rule = parse_rule("F(x,y,z) <- G(x,z), H(y,z), I(x,y,z). @order(x,y,z)")?;
    let plan = Plan::new(rule, |n| arity.get(n).map(|&k| Schema::relation(n, k)))?;
    let inputs = |cat: &BTreeMap<&str, RelationVersion>| plan.atoms.iter().map(|a| cat[a.pred.as_str()].clone()).collect::<Vec<_>>();
    let mut engine = RuleEngine::new(plan.clone());
    let boot = engine.bootstrap(inputs(&cat))?;
    println!("bootstrap: {} ops, |F| = {}, indices: {}", boot.ops(), engine.head("F").unwrap().version().len(), plan.index_names().join(" "));

    for round in 0..5 {
        let name = ["G", "H", "I"][rng.gen_range(0..3)];
        let v = &cat[name];
        let mut txn = v.begin();
        let victim = v.tuples()[rng.gen_range(0..v.len())].clone();
        txn.erase(&victim)?;
        txn.insert(Tuple::new((0..arity[name]).map(|_| rng.gen_range(0..100)).collect::<Vec<i64>>()))?;
        cat.insert(name, txn.commit());

        let r = engine.maintain(inputs(&cat), true)?;
        let full = evaluate(&plan, &inputs(&cat), EvalOptions::default())?;
        println!(
            "round {round}: edit {name}, maintain {} ops (+{} -{}), full evaluation {} ops",
            r.ops(),
            r.head_inserts,
            r.head_erases,
            full.ops
        );
    }
    Ok(())
}
