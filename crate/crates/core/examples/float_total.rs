//! Exact floating-point totals under inserts and deletes.

use lftj_ivm::heads::SegmentedFloat;

fn main() -> lftj_ivm::Result<()> {
    let mut acc = SegmentedFloat::new();
    let mut naive = 0.0f64;
    for s in [1e300, 1.0, 1e-300, -1e300] {
        acc.add(s)?;
        naive += s;
        println!("add {s:e}: exact total {:e}, naive {naive:e}, {} segments stored", acc.to_float(), acc.stored_segments());
    }
    acc.sub(1.0)?;
    naive -= 1.0;
    println!("sub 1: exact total {:e}, naive {naive:e}", acc.to_float());

    let mut acc = SegmentedFloat::new();
    acc.add(2f64.powi(500))?;
    acc.add(-1.0)?;
    println!("2^500 - 1 stored in {} segments, rounds to {:e}", acc.stored_segments(), acc.to_float());
    Ok(())
}
