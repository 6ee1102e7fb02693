//! Delta records and trie surgery between two versions of a relation.

use lftj_ivm::store::{delta_iter, surgery_iter, RelationVersion, Schema};
use lftj_ivm::Tuple;

fn main() -> lftj_ivm::Result<()> {
    let rows = [[0, 30, 80], [0, 30, 81], [1, 35, 60], [1, 35, 61], [3, 40, 90], [3, 50, 91], [3, 50, 92]];
    let v1 = RelationVersion::from_tuples(Schema::relation("A", 3), 4, rows.iter().map(|r| Tuple::new(r.to_vec())))?;
    let mut txn = v1.begin();
    for r in [[0, 30, 81], [3, 40, 90], [3, 50, 92]] {
        txn.erase(&Tuple::new(r.to_vec()))?;
    }
    txn.insert(Tuple::new(vec![4, 60, 71]))?;
    let v2 = txn.commit();
    println!("version 2 shares {} of {} pages", v2.page_count() - v2.pages_not_shared_with(&v1), v2.page_count());

    println!("delta records:");
    for c in delta_iter(&v1, &v2)? {
        println!("  {c}");
    }
    println!("surgery:");
    for c in surgery_iter(&v1, &v2)? {
        println!("  {c}");
    }
    Ok(())
}
