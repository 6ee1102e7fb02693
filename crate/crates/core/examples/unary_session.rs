//! Maintain C(x) <- A(x), B(x) through one round of edits.
//!
//! Prints the change oracle, the head delta and the revised sensitivity
//! indices.

use lftj_ivm::maintain::RuleEngine;
use lftj_ivm::rule::parse_rule;
use lftj_ivm::rule::Plan;
use lftj_ivm::store::{Schema, RelationVersion};
use lftj_ivm::Tuple;

fn unary(name: &str, xs: &[i64]) -> RelationVersion {
    RelationVersion::from_tuples(Schema::relation(name, 1), 64, xs.iter().map(|&x| Tuple::new(vec![x]))).unwrap()
}

fn edit(v: &RelationVersion, ins: &[i64], del: &[i64]) -> RelationVersion {
    let mut txn = v.begin();
    for &x in del {
        txn.erase(&Tuple::new(vec![x])).unwrap();
    }
    for &x in ins {
        txn.insert(Tuple::new(vec![x])).unwrap();
    }
    txn.commit()
}

fn main() -> lftj_ivm::Result<()> {
    let a = unary("A", &[0, 2, 4, 5, 6]);
    let b = unary("B", &[1, 2, 6, 7]);
    let rule = parse_rule("C(x) <- A(x), B(x). @force_sens")?;
    let plan = Plan::new(rule, |n| matches!(n, "A" | "B").then(|| Schema::relation(n, 1)))?;
    let mut engine = RuleEngine::new(plan);
    engine.bootstrap(vec![a.clone(), b.clone()])?;
    print!("C before:\n{}", engine.head("C").unwrap().render(false));
    print!("sensitivities:\n{}", engine.sensitivities().render(engine.plan()));

    let a2 = edit(&a, &[8], &[5]);
    let b2 = edit(&b, &[3], &[2]);
    let report = engine.maintain(vec![a2, b2], true)?;
    print!("oracle:\n{}", engine.last_oracle().unwrap().render());
    println!("report:\n{report}");
    print!("C after:\n{}", engine.head("C").unwrap().render(false));
    print!("revised sensitivities:\n{}", engine.sensitivities().render(engine.plan()));
    Ok(())
}
