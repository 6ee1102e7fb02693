//! Range aggregates and complement iteration on scan trees.

use lftj_ivm::scan::{complement_iter, GroupSumOp, ScanTree};
use lftj_ivm::Key;

fn main() -> lftj_ivm::Result<()> {
    let t = ScanTree::<GroupSumOp>::from_sorted((1..=8).map(|i| (vec![Key::Fin(i)], 10 * i)).collect(), 1)?;
    for (lo, hi) in [(1, 8), (1, 3), (2, 8), (3, 7), (4, 7)] {
        let (sum, spans) = t.range_probe(&[Key::Fin(lo)], &[Key::Fin(hi)])?;
        let parts: Vec<String> =
            spans.iter().map(|&(i, j)| if i == j { format!("a{}", i + 1) } else { format!("A{}{}", i + 1, j + 1) }).collect();
        println!("sum a{lo}..a{hi} = {} from {}", sum.unwrap_or_default(), parts.join(" + "));
    }

    let all = ScanTree::count_set((0..1000).map(|i| vec![Key::Fin(i)]), 16)?;
    let most = ScanTree::count_set((0..1000).filter(|i| i % 250 != 7).map(|i| vec![Key::Fin(i)]), 16)?;
    let mut it = complement_iter(&all, &most);
    let missing = it.by_ref().collect::<lftj_ivm::Result<Vec<_>>>()?;
    println!("missing keys {missing:?} found after {} key visits", it.key_visits());
    Ok(())
}
