//! Stabbing queries on an interval index.

use lftj_ivm::interval::{IntervalIndex, SensRecord};
use lftj_ivm::Key;

fn main() -> lftj_ivm::Result<()> {
    let ivs = [
        (11, 100), (29, 47), (40, 42), (49, 82), (62, 78), (63, 73), (67, 72), (67, 78),
        (72, 87), (77, 96), (82, 94), (83, 99), (86, 98), (90, 93), (93, 100), (98, 107),
    ];
    let mut ix = IntervalIndex::new(0, 0);
    for (a, b) in ivs {
        ix.add(SensRecord::interval(Key::Fin(a), Key::Fin(b)))?;
    }
    for x in [10, 45, 80, 105] {
        ix.reset_stats();
        let hits = ix.stab(&[], Key::Fin(x));
        let shown: Vec<String> = hits.iter().map(|r| format!("[{},{}]", r.lo, r.hi)).collect();
        println!("stab({x}) = {{{}}} after {} node visits", shown.join(", "), ix.stats().visits);
    }
    ix.add(SensRecord::interval(Key::Fin(200), Key::Max))?;
    println!("stab(1000) = {} record(s)", ix.stab(&[], Key::Fin(1000)).len());
    Ok(())
}
