//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use lftj_ivm::cli::Workspace;
use lftj_ivm::heads::SegmentedFloat;
use lftj_ivm::interval::{IntervalIndex, SensRecord};
use lftj_ivm::lftj::{evaluate, trace_distance, EvalOptions};
use lftj_ivm::maintain::RuleEngine;
use lftj_ivm::scan::{complement_iter, GroupSumOp, MaxOp, ScanTree};
use lftj_ivm::store::{delta_iter, surgery_iter, RelationVersion, Schema};
use lftj_ivm::{Key, Tuple};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn same(what: &str, got: &str, want: &str) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn ceil_log2(n: usize) -> u64 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as u64
}

fn unary_worked_example() -> Check {
    let start = Instant::now();
    let golden = |name: &str| std::fs::read_to_string(manifest().join("tests/golden").join(name)).unwrap();
    let mut w = Workspace::with_base(manifest().join("tests/data/unary"));
    let run = |w: &mut Workspace, cmd: &str| w.execute(cmd).map_err(|e| format!("{cmd}: {e}"));
    run(&mut w, "load A/1 A.txt")?;
    run(&mut w, "load B/1 B.txt")?;
    run(&mut w, "rule C(x) <- A(x), B(x). @force_sens")?;
    run(&mut w, "eval 0")?;
    same("head before", &run(&mut w, "dump C")?, &golden("unary_head_before.txt"))?;
    same("sensitivities before", &run(&mut w, "dump-sens 0")?, &golden("unary_sens_before.txt"))?;
    run(&mut w, "delta A A.delta")?;
    run(&mut w, "delta B B.delta")?;
    let report = run(&mut w, "maintain 0")?;
    if !report.contains("head_erases=1\n") || !report.contains("head_inserts=0\n") {
        return Err(format!("head delta is not {{(2, ERASE)}}: {report}"));
    }
    same("oracle", &run(&mut w, "dump-oracle 0")?, &golden("unary_oracle.txt"))?;
    same("head after", &run(&mut w, "dump C")?, &golden("unary_head_after.txt"))?;
    same("revised sensitivities", &run(&mut w, "dump-sens 0")?, &golden("unary_sens_after.txt"))?;
    let t = start.elapsed();
    if t.as_secs_f64() >= 1.0 {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("oracle {{[2,2],[6,+inf]}}, delta {{(2, ERASE)}}, revised indices match goldens in {t:?}"))
}

fn interval_figures() -> Check {
    let stab = |ivs: &[(i64, i64)], x: i64| -> BTreeSet<(i64, i64)> {
        let mut ix = IntervalIndex::new(0, 0);
        for &(a, b) in ivs {
            ix.add(SensRecord::interval(Key::Fin(a), Key::Fin(b))).unwrap();
        }
        ix.stab(&[], Key::Fin(x)).iter().map(|r| (r.lo.finite().unwrap(), r.hi.finite().unwrap())).collect()
    };
    let small = stab(&[(2, 10), (3, 7), (5, 15), (6, 9)], 10);
    if small != BTreeSet::from([(2, 10), (5, 15)]) {
        return Err(format!("stab(10) = {small:?}"));
    }
    let figure = [
        (11, 100),
        (29, 47),
        (40, 42),
        (49, 82),
        (62, 78),
        (63, 73),
        (67, 72),
        (67, 78),
        (72, 87),
        (77, 96),
        (82, 94),
        (83, 99),
        (86, 98),
        (90, 93),
        (93, 100),
        (98, 107),
    ];
    let got = stab(&figure, 80);
    let want = BTreeSet::from([(11, 100), (49, 82), (72, 87), (77, 96)]);
    if got != want {
        return Err(format!("stab(80) = {got:?}"));
    }
    Ok("stab(10) = {[2,10],[5,15]}, stab(80) = {[11,100],[49,82],[72,87],[77,96]}".into())
}

fn scan_figures() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let sales = [
        (1, 1, "1000.00"),
        (1, 2, "1500.00"),
        (1, 3, "7300.00"),
        (1, 4, "8000.00"),
        (1, 5, "15000.00"),
        (2, 6, "2900.00"),
        (2, 7, "3500.00"),
        (2, 8, "1440.00"),
        (2, 9, "3300.00"),
        (2, 10, "1245.00"),
        (2, 11, "7024.00"),
        (2, 12, "5510.00"),
        (2, 13, "9000.00"),
        (3, 14, "325.00"),
        (3, 15, "4000.00"),
        (3, 16, "5300.00"),
    ];
    let text: String = sales.iter().map(|(r, s, v)| format!("{r} {s} {v}\n")).collect();
    std::fs::write(dir.path().join("sales.txt"), text).unwrap();
    let mut w = Workspace::with_base(dir.path());
    w.execute("load sales[2] sales.txt").map_err(|e| e.to_string())?;
    w.execute("rule maxsales[r]=m <- agg<< m=max(v) >> sales[r,s]=v.").map_err(|e| e.to_string())?;
    w.execute("eval 0").map_err(|e| e.to_string())?;
    let dump = w.execute("dump maxsales").map_err(|e| e.to_string())?;
    let region2 = dump.lines().find(|l| l.starts_with("2\t")).unwrap_or_default();
    let v: f64 = region2.split('\t').nth(1).and_then(|s| s.parse().ok()).ok_or(format!("bad dump {dump:?}"))?;
    if format!("{v:.2}") != "9000.00" {
        return Err(format!("maxsales[2] = {v:.2}"));
    }

    let t = ScanTree::<GroupSumOp>::from_sorted((1..=8).map(|i| (vec![Key::Fin(i)], i)).collect(), 1).unwrap();
    let name = |(i, j): (usize, usize)| if i == j { format!("a{}", i + 1) } else { format!("A{}{}", i + 1, j + 1) };
    let cases = [
        (1, 8, "A18"),
        (1, 3, "A12+a3"),
        (2, 8, "a2+A34+A58"),
        (3, 7, "A34+A56+a7"),
        (4, 7, "a4+A56+a7"),
    ];
    for (lo, hi, want) in cases {
        let (sum, spans) = t.range_probe(&[Key::Fin(lo)], &[Key::Fin(hi)]).unwrap();
        let got = spans.into_iter().map(name).collect::<Vec<_>>().join("+");
        same(&format!("a{lo}..a{hi}"), &got, want)?;
        if sum != Some((lo..=hi).sum()) {
            return Err(format!("sum over a{lo}..a{hi} is {sum:?}"));
        }
    }
    Ok("maxsales[2] = 9000.00; five decompositions combine the listed subtrees".into())
}

fn surgery_figure() -> Check {
    let build = |rows: &[[i64; 3]]| {
        RelationVersion::from_tuples(Schema::relation("A", 3), 4, rows.iter().map(|r| Tuple::new(r.to_vec()))).unwrap()
    };
    let v1 = build(&[[0, 30, 80], [0, 30, 81], [1, 35, 60], [1, 35, 61], [3, 40, 90], [3, 50, 91], [3, 50, 92]]);
    let mut txn = v1.begin();
    for r in [[0, 30, 81], [3, 40, 90], [3, 50, 92]] {
        txn.erase(&Tuple::new(r.to_vec())).unwrap();
    }
    txn.insert(Tuple::new(vec![4, 60, 71])).unwrap();
    let v2 = txn.commit();
    let deltas: Vec<String> = delta_iter(&v1, &v2).unwrap().map(|c| c.to_string()).collect();
    let want = ["ERASE 0-30-81", "ERASE 3-40-90", "ERASE 3-50-92", "INSERT 4-60-71"];
    same("delta records", &deltas.join(", "), &want.join(", "))?;
    let ops: Vec<String> = surgery_iter(&v1, &v2).unwrap().map(|c| c.to_string()).collect();
    let want = ["ERASE 0-30-81", "ERASE 3-40-90", "ERASE 3-40", "ERASE 3-50-92", "INSERT 4", "INSERT 4-60", "INSERT 4-60-71"];
    same("surgery operations", &ops.join(", "), &want.join(", "))?;
    Ok("4 delta records and 7 surgery operations as listed".into())
}

struct Workloads {
    results: Vec<(&'static str, WorkloadResult)>,
    elapsed: std::time::Duration,
}

fn run_workloads() -> Workloads {
    let start = Instant::now();
    let results = shapes()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = StdRng::seed_from_u64(5000 + i as u64);
            (s.name, run_workload(s, &mut rng, 200))
        })
        .collect();
    Workloads { results, elapsed: start.elapsed() }
}

fn oracle_equivalence(w: &Workloads) -> Check {
    for need in REQUIRED {
        if !w.results.iter().any(|(n, _)| n == need) {
            return Err(format!("shape {need} not run"));
        }
    }
    let mut bad = Vec::new();
    for (name, r) in &w.results {
        if r.rounds < 200 {
            bad.push(format!("{name}: only {} rounds", r.rounds));
        }
        if let Some(m) = r.mismatches.first() {
            bad.push(format!("{name}: {} mismatches, first {m}", r.mismatches.len()));
        }
    }
    if w.elapsed.as_secs() >= 60 {
        bad.push(format!("took {:?}", w.elapsed));
    }
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    Ok(format!("{} shapes x 200 rounds, zero mismatches, {:?}", w.results.len(), w.elapsed))
}

fn oracle_soundness(w: &Workloads) -> Check {
    let bad: Vec<String> = w
        .results
        .iter()
        .filter_map(|(n, r)| r.soundness_mismatches.first().map(|m| format!("{n}: {m}")))
        .collect();
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    Ok(format!("{} shapes: heads without the oracle equal heads with it after every round", w.results.len()))
}

/// Build an `n`-record instance for a cost shape.
fn cost_instance(name: &str, rng: &mut StdRng) -> (Vec<RelSpec>, Catalog) {
    let rels = match name {
        "unary intersection" => vec![RelSpec { name: "A", arity: 1, values: Values::None, domain: 200_000, initial: 50_000 }, RelSpec {
            name: "B",
            arity: 1,
            values: Values::None,
            domain: 200_000,
            initial: 50_000,
        }],
        _ => vec![
            RelSpec { name: "G", arity: 2, values: Values::None, domain: 3000, initial: 25_000 },
            RelSpec { name: "H", arity: 2, values: Values::None, domain: 3000, initial: 25_000 },
            RelSpec { name: "I", arity: 3, values: Values::None, domain: 3000, initial: 40_000 },
            RelSpec { name: "R", arity: 1, values: Values::None, domain: 3000, initial: 10_000 },
        ],
    };
    let cat = random_catalog(rng, &rels, 64);
    (rels, cat)
}

fn cost_proportionality() -> Check {
    let shapes = [
        ("unary intersection", "C(x) <- A(x), B(x). @force_sens"),
        ("F <- G,H,I,R", "F(x,y) <- G(x,z), H(y,z), I(x,y,z), R(z). @order(x,y,z)"),
    ];
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for (si, (name, rule)) in shapes.iter().enumerate() {
        let mut rng = StdRng::seed_from_u64(77 + si as u64);
        let (rels, mut cat) = cost_instance(name, &mut rng);
        let n: usize = cat.values().map(RelationVersion::len).sum();
        let log = ceil_log2(n);
        let mut e = bootstrap(rule, &cat);
        let plan = e.plan().clone();
        let full = |cat: &Catalog| evaluate(&plan, &inputs(&plan, cat), EvalOptions { trace: true, ..Default::default() }).unwrap();
        let mut prev = full(&cat);
        let (mut worst_c, mut worst_ratio, mut total_ops) = (0f64, f64::INFINITY, 0u64);
        for edit in 0..100 {
            cat = random_edits(&mut rng, &rels, &cat, 1);
            let r = e.maintain(inputs(&plan, &cat), true).map_err(|e| e.to_string())?;
            let next = full(&cat);
            let delta = trace_distance(prev.trace.as_ref().unwrap(), next.trace.as_ref().unwrap());
            let ops = r.ops();
            total_ops += ops;
            let c = ops as f64 / ((delta + 1) * log) as f64;
            worst_c = worst_c.max(c);
            let ratio = next.ops as f64 / ops.max(1) as f64;
            worst_ratio = worst_ratio.min(ratio);
            if c > 64.0 {
                bad.push(format!("{name} edit {edit}: ops {ops} > 64*({delta}+1)*{log}"));
            }
            if ratio < 100.0 {
                bad.push(format!("{name} edit {edit}: maintain {ops} ops vs bootstrap {}", next.ops));
            }
            prev = next;
        }
        lines.push(format!("{name}: n={n}, worst C={worst_c:.2}, min speedup={worst_ratio:.0}x, mean ops={}", total_ops / 100));
    }
    if !bad.is_empty() {
        return Err(format!("{}; {}", bad[..bad.len().min(4)].join("; "), lines.join("; ")));
    }
    Ok(lines.join("; "))
}

fn complexity_counters() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = BTreeMap::new();
    let mut note = |what: &'static str, used: u64, bound: u64| -> Result<(), String> {
        let e = worst.entry(what).or_insert(0f64);
        *e = e.max(used as f64 / bound as f64);
        if used > bound {
            return Err(format!("{what}: {used} > {bound}"));
        }
        Ok(())
    };
    for &n in &[100usize, 5_000, 60_000] {
        // Range scans.
        let mut keys: Vec<i64> = (0..n).map(|_| rng.gen_range(0..10 * n as i64)).collect();
        keys.sort();
        keys.dedup();
        let t = ScanTree::<MaxOp<i64>>::from_sorted(keys.iter().map(|&k| (vec![Key::Fin(k)], k)).collect(), 12).unwrap();
        for _ in 0..300 {
            let a = rng.gen_range(0..10 * n as i64);
            let b = rng.gen_range(a..=10 * n as i64);
            t.reset_stats();
            t.range_scan(&[Key::Fin(a)], &[Key::Fin(b)]).unwrap();
            note("range_scan combines", t.stats().combines, 2 * ceil_log2(keys.len()) + 2)?;
        }

        // Stabbing queries.
        let mut ix = IntervalIndex::new(0, 0);
        for _ in 0..n {
            let a = rng.gen_range(0..10 * n as i64);
            let len = if rng.gen_bool(0.9) { rng.gen_range(0..20) } else { rng.gen_range(0..2 * n as i64) };
            ix.add(SensRecord::interval(Key::Fin(a), Key::Fin(a + len))).unwrap();
        }
        for _ in 0..300 {
            let x = rng.gen_range(0..10 * n as i64);
            ix.reset_stats();
            let m = ix.stab(&[], Key::Fin(x)).len() as u64;
            note("stab visits", ix.stats().visits, 8 * (m + 1) * ceil_log2(ix.len() + 2))?;
        }

        // Delta iteration.
        let base = RelationVersion::from_tuples(Schema::relation("R", 1), 16, keys.iter().map(|&k| Tuple::new(vec![k]))).unwrap();
        for _ in 0..30 {
            let mut txn = base.begin();
            for _ in 0..rng.gen_range(0..20) {
                let k = rng.gen_range(0..10 * n as i64);
                let t = Tuple::new(vec![k]);
                if txn.get(&[k]).is_some() {
                    txn.erase(&t).unwrap();
                } else {
                    txn.insert(t).unwrap();
                }
            }
            let next = txn.commit();
            let before: BTreeSet<Tuple> = base.tuples().into_iter().collect();
            let after: BTreeSet<Tuple> = next.tuples().into_iter().collect();
            let d = before.symmetric_difference(&after).count() as u64;
            let mut it = delta_iter(&base, &next).unwrap();
            let delta = it.by_ref().count() as u64;
            if delta != d {
                return Err(format!("delta_iter found {delta} changes, expected {d}"));
            }
            note("delta_iter pages", it.pages_touched(), 8 * (delta + 1) * ceil_log2(base.len() + 2))?;
        }

        // Complement iteration.
        let tk: Vec<Vec<Key>> = keys.iter().map(|&k| vec![Key::Fin(k)]).collect();
        let tree = ScanTree::count_set(tk.clone(), 12).unwrap();
        for _ in 0..20 {
            let gone: BTreeSet<usize> = (0..rng.gen_range(0..10)).map(|_| rng.gen_range(0..tk.len())).collect();
            let s = ScanTree::count_set(tk.iter().enumerate().filter(|(i, _)| !gone.contains(i)).map(|(_, k)| k.clone()), 12).unwrap();
            let mut it = complement_iter(&tree, &s);
            let found = it.by_ref().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
            if found.len() != gone.len() {
                return Err(format!("complement found {} keys, expected {}", found.len(), gone.len()));
            }
            note("complement visits", it.key_visits(), 8 * (gone.len() as u64 + 1) * ceil_log2(tk.len()))?;
        }
    }
    let w: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {:.0}% of bound", v * 100.0)).collect();
    Ok(w.join(", "))
}

/// Exact multiple of 2^-1074 for one double.
fn scaled(s: f64) -> BigInt {
    let bits = s.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
    let v = BigInt::from(m) << (e + 1074) as usize;
    if s < 0.0 {
        -v
    } else {
        v
    }
}

/// Nearest double to `n * 2^-1074`, via the standard decimal parser.
fn rounded(n: &BigInt) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let digits = (n.abs() * BigInt::from(5).pow(1074)).to_string();
    let padded = format!("{digits:0>1075}");
    let (int, frac) = padded.split_at(padded.len() - 1074);
    let v: f64 = format!("{int}.{frac}").parse().unwrap();
    if n.is_negative() {
        -v
    } else {
        v
    }
}

fn float_exactness() -> Check {
    let mut rng = StdRng::seed_from_u64(88);
    let mut worst = 0;
    for trial in 0..50 {
        let mut acc = SegmentedFloat::new();
        let mut live: Vec<f64> = Vec::new();
        let mut exact = BigInt::zero();
        for step in 0..1000 {
            if !live.is_empty() && rng.gen_bool(0.4) {
                let s = live.swap_remove(rng.gen_range(0..live.len()));
                acc.sub(s).map_err(|e| e.to_string())?;
                exact -= scaled(s);
            } else {
                let s = loop {
                    let f = match rng.gen_range(0..3) {
                        0 => f64::from_bits(rng.gen()),
                        1 => rng.gen_range(-1e6..1e6),
                        _ => rng.gen_range(-1.0..1.0) * 2f64.powi(rng.gen_range(-1074..1000)),
                    };
                    if f.is_finite() {
                        break f;
                    }
                };
                acc.add(s).map_err(|e| e.to_string())?;
                live.push(s);
                exact += scaled(s);
            }
            worst = worst.max(acc.last_touched());
            if acc.exact() != exact {
                return Err(format!("trial {trial} step {step}: exact value differs"));
            }
            let want = rounded(&exact);
            if acc.to_float().to_bits() != want.to_bits() {
                return Err(format!("trial {trial} step {step}: to_float {} vs {want}", acc.to_float()));
            }
        }
    }
    let mut acc = SegmentedFloat::new();
    acc.add(2f64.powi(500)).unwrap();
    acc.add(-1.0).unwrap();
    if acc.stored_segments() != 2 {
        return Err(format!("2^500 - 1 stores {} segments", acc.stored_segments()));
    }
    Ok(format!("50 x 1000 interleavings bit-exact; 2^500-1 stores 2 segments; at most {worst} segments written per update"))
}

fn sensitivity_completeness() -> Check {
    let mut summary = Vec::new();
    let mut misses = Vec::new();
    for (si, shape) in shapes().iter().enumerate() {
        for forced in [true, false] {
            if forced && shape.rule.contains("@force_sens") {
                continue;
            }
            let rule = if forced { format!("{} @force_sens", shape.rule) } else { shape.rule.to_string() };
            let mut rng = StdRng::seed_from_u64(900 + si as u64);
            let rels = capped(&shape.rels, 50);
            let cat = random_catalog(&mut rng, &rels, 4);
            let mut e: RuleEngine = bootstrap(&rule, &cat);
            let plan = e.plan().clone();
            let base = assignment_set(&plan, &inputs(&plan, &cat));
            let (mut tried, mut effective) = (0, 0);
            for r in &rels {
                let v = &cat[r.name];
                let mut edits: Vec<(Option<Tuple>, Option<Tuple>)> = Vec::new();
                for t in v.tuples() {
                    edits.push((Some(t.clone()), None));
                    if r.values != Values::None {
                        let nv = loop {
                            let nv = random_value(&mut rng, r.values);
                            if nv != t.value {
                                break nv;
                            }
                        };
                        edits.push((Some(t.clone()), Some(Tuple { keys: t.keys.clone(), value: nv })));
                    }
                }
                let total = (r.domain as usize).pow(r.arity as u32);
                for code in 0..total {
                    let keys: Vec<i64> = (0..r.arity).rev().map(|i| (code / (r.domain as usize).pow(i as u32)) as i64 % r.domain).collect();
                    if v.get(&keys).is_none() {
                        edits.push((None, Some(Tuple { keys, value: random_value(&mut rng, r.values) })));
                    }
                }
                for (erase, insert) in edits {
                    let mut txn = v.begin();
                    if let Some(t) = &erase {
                        txn.erase(t).unwrap();
                    }
                    if let Some(t) = insert.clone() {
                        txn.insert(t).unwrap();
                    }
                    let mut next = cat.clone();
                    next.insert(r.name.to_string(), txn.commit());
                    let ins = inputs(&plan, &next);
                    let after = assignment_set(&plan, &ins);
                    tried += 1;
                    if after == base {
                        continue;
                    }
                    effective += 1;
                    let (oracle, matched, _) = e.build_oracle(&ins, false).map_err(|e| e.to_string())?;
                    let changed: Vec<_> = after.symmetric_difference(&base).collect();
                    let uncovered = changed.iter().find(|a| !oracle.admits(&a.keys));
                    if (forced && matched == 0) || uncovered.is_some() {
                        misses.push(format!("{rule}: erase {erase:?} insert {insert:?} matched {matched} uncovered {uncovered:?}"));
                    }
                }
            }
            summary.push(format!("{}{}: {effective}/{tried}", shape.name, if forced { " (all levels indexed)" } else { "" }));
        }
    }
    if !misses.is_empty() {
        return Err(format!("{} misses, first: {}", misses.len(), misses[0]));
    }
    Ok(format!("effective/tried perturbations, zero misses: {}", summary.join(", ")))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let t = start.elapsed();
        match r {
            Ok(detail) => println!("PASS {n:>2} {title}: {detail} [{t:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {title}: {detail} [{t:.2?}]");
            }
        }
    };
    report(1, "worked example", &mut unary_worked_example);
    report(2, "interval-tree figures", &mut interval_figures);
    report(3, "scan-tree figure", &mut scan_figures);
    report(4, "tree surgery", &mut surgery_figure);
    let workloads = run_workloads();
    report(5, "oracle equivalence", &mut || oracle_equivalence(&workloads));
    report(6, "cost proportionality", &mut cost_proportionality);
    report(7, "complexity counters", &mut complexity_counters);
    report(8, "float exactness", &mut float_exactness);
    report(9, "oracle soundness", &mut || oracle_soundness(&workloads));
    report(10, "sensitivity completeness", &mut sensitivity_completeness);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
