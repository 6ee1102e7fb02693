//! Differences between two versions of one relation.
//!
//! [`DeltaIter`] walks both page trees in key order and skips any subtree
//! whose page is shared by both versions. [`SurgeryIter`] turns the record
//! stream into branch insertions and removals of the trie presentation.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use super::page::Page;
use super::RelationVersion;
use crate::error::{Error, Result};
use crate::key::{Delta, Tuple};

/// One record (or, for surgeries, one key prefix) entering or leaving.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Change {
    pub delta: Delta,
    pub tuple: Tuple,
}

impl Change {
    pub fn depth(&self) -> usize {
        self.tuple.keys.len()
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let keys: Vec<String> = self.tuple.keys.iter().map(|k| k.to_string()).collect();
        write!(f, "{} {}", self.delta, keys.join("-"))?;
        if let Some(v) = self.tuple.value {
            write!(f, "={v}")?;
        }
        Ok(())
    }
}

enum Item {
    Page(Arc<Page>),
    Rec(Tuple),
}

impl Item {
    fn min_key(&self) -> &[i64] {
        match self {
            Item::Page(p) => p.min_key().unwrap_or(&[]),
            Item::Rec(t) => &t.keys,
        }
    }
}

/// Stack of pending items, smallest on top.
struct Side {
    stack: Vec<Item>,
}

impl Side {
    fn new(root: &Arc<Page>) -> Self {
        let mut stack = Vec::new();
        if root.len() > 0 {
            stack.push(Item::Page(root.clone()));
        }
        Side { stack }
    }

    fn expand(&mut self, touched: &mut u64) {
        let Some(Item::Page(p)) = self.stack.pop() else {
            unreachable!("expand called on a record")
        };
        *touched += 1;
        match &*p {
            Page::Leaf { recs } => self.stack.extend(recs.iter().rev().cloned().map(Item::Rec)),
            Page::Branch { kids, .. } => self.stack.extend(kids.iter().rev().cloned().map(Item::Page)),
        }
    }
}

/// Record-level difference stream in key order.
pub struct DeltaIter {
    old: Side,
    new: Side,
    pending: VecDeque<Change>,
    touched: u64,
}

/// Enumerate the records erased and inserted going from `old` to `new`.
pub fn delta_iter(old: &RelationVersion, new: &RelationVersion) -> Result<DeltaIter> {
    if old.lineage() != new.lineage() {
        return Err(Error::Lineage);
    }
    Ok(DeltaIter {
        old: Side::new(old.root()),
        new: Side::new(new.root()),
        pending: VecDeque::new(),
        touched: 0,
    })
}

impl DeltaIter {
    /// Pages opened so far; shared subtrees are never opened.
    pub fn pages_touched(&self) -> u64 {
        self.touched
    }

    fn step(&mut self) -> bool {
        use std::cmp::Ordering::*;
        let (a, b) = (self.old.stack.last(), self.new.stack.last());
        match (a, b) {
            (None, None) => return false,
            (Some(Item::Rec(_)), None) => {
                let Some(Item::Rec(t)) = self.old.stack.pop() else { unreachable!() };
                self.pending.push_back(Change { delta: Delta::Erase, tuple: t });
            }
            (None, Some(Item::Rec(_))) => {
                let Some(Item::Rec(t)) = self.new.stack.pop() else { unreachable!() };
                self.pending.push_back(Change { delta: Delta::Insert, tuple: t });
            }
            (Some(Item::Page(_)), None) => self.old.expand(&mut self.touched),
            (None, Some(Item::Page(_))) => self.new.expand(&mut self.touched),
            (Some(x), Some(y)) => {
                if let (Item::Page(p), Item::Page(q)) = (x, y) {
                    if Arc::ptr_eq(p, q) {
                        self.old.stack.pop();
                        self.new.stack.pop();
                        return true;
                    }
                }
                match x.min_key().cmp(y.min_key()) {
                    Less => match x {
                        Item::Rec(_) => {
                            let Some(Item::Rec(t)) = self.old.stack.pop() else { unreachable!() };
                            self.pending.push_back(Change { delta: Delta::Erase, tuple: t });
                        }
                        Item::Page(_) => self.old.expand(&mut self.touched),
                    },
                    Greater => match y {
                        Item::Rec(_) => {
                            let Some(Item::Rec(t)) = self.new.stack.pop() else { unreachable!() };
                            self.pending.push_back(Change { delta: Delta::Insert, tuple: t });
                        }
                        Item::Page(_) => self.new.expand(&mut self.touched),
                    },
                    Equal => match (x, y) {
                        (Item::Page(p), Item::Page(q)) => {
                            let (hp, hq) = (p.height(), q.height());
                            if hp >= hq {
                                self.old.expand(&mut self.touched);
                            }
                            if hq >= hp {
                                self.new.expand(&mut self.touched);
                            }
                        }
                        (Item::Page(_), Item::Rec(_)) => self.old.expand(&mut self.touched),
                        (Item::Rec(_), Item::Page(_)) => self.new.expand(&mut self.touched),
                        (Item::Rec(_), Item::Rec(_)) => {
                            let Some(Item::Rec(t)) = self.old.stack.pop() else { unreachable!() };
                            let Some(Item::Rec(u)) = self.new.stack.pop() else { unreachable!() };
                            if t.value != u.value {
                                self.pending.push_back(Change { delta: Delta::Erase, tuple: t });
                                self.pending.push_back(Change { delta: Delta::Insert, tuple: u });
                            }
                        }
                    },
                }
            }
        }
        true
    }
}

impl Iterator for DeltaIter {
    type Item = Change;

    fn next(&mut self) -> Option<Change> {
        loop {
            if let Some(c) = self.pending.pop_front() {
                return Some(c);
            }
            if !self.step() {
                return None;
            }
        }
    }
}

/// Trie-level branch insertions and removals, grouped per record change:
/// removals deepest first, insertions shallowest first.
pub struct SurgeryIter {
    old: RelationVersion,
    new: RelationVersion,
    deltas: DeltaIter,
    pending: VecDeque<Change>,
    touched: u64,
}

pub fn surgery_iter(old: &RelationVersion, new: &RelationVersion) -> Result<SurgeryIter> {
    Ok(SurgeryIter {
        deltas: delta_iter(old, new)?,
        old: old.clone(),
        new: new.clone(),
        pending: VecDeque::new(),
        touched: 0,
    })
}

impl SurgeryIter {
    pub fn pages_touched(&self) -> u64 {
        self.touched + self.deltas.pages_touched()
    }

    /// True when `t` is the last record of `v` under `keys[..d]`.
    fn last_under(&mut self, v: &RelationVersion, keys: &[i64], d: usize) -> bool {
        v.seek(keys, true, &mut self.touched)
            .is_none_or(|next| next.keys[..d] != keys[..d])
    }

    /// True when `t` is the first record of `v` under `keys[..d]`.
    fn first_under(&mut self, v: &RelationVersion, keys: &[i64], d: usize) -> bool {
        let first = v.seek(&keys[..d], false, &mut self.touched);
        first.is_some_and(|f| f.keys == keys)
    }

    fn has_prefix(&mut self, v: &RelationVersion, prefix: &[i64]) -> bool {
        v.seek(prefix, false, &mut self.touched)
            .is_some_and(|t| t.keys.starts_with(prefix))
    }

    fn expand(&mut self, c: Change) {
        let arity = c.tuple.keys.len();
        let keys = c.tuple.keys.clone();
        match c.delta {
            Delta::Erase => {
                self.pending.push_back(c);
                let (old, new) = (self.old.clone(), self.new.clone());
                for d in (1..arity).rev() {
                    if self.has_prefix(&new, &keys[..d]) || !self.last_under(&old, &keys, d) {
                        break;
                    }
                    self.pending.push_back(Change {
                        delta: Delta::Erase,
                        tuple: Tuple::new(&keys[..d]),
                    });
                }
            }
            Delta::Insert => {
                let (old, new) = (self.old.clone(), self.new.clone());
                let mut prefixes = Vec::new();
                for d in (1..arity).rev() {
                    if self.has_prefix(&old, &keys[..d]) || !self.first_under(&new, &keys, d) {
                        break;
                    }
                    prefixes.push(Change {
                        delta: Delta::Insert,
                        tuple: Tuple::new(&keys[..d]),
                    });
                }
                self.pending.extend(prefixes.into_iter().rev());
                self.pending.push_back(c);
            }
        }
    }
}

impl Iterator for SurgeryIter {
    type Item = Change;

    fn next(&mut self) -> Option<Change> {
        loop {
            if let Some(c) = self.pending.pop_front() {
                return Some(c);
            }
            let c = self.deltas.next()?;
            self.expand(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Schema;
    use std::collections::BTreeSet;

    fn version1() -> RelationVersion {
        let rows = [
            [0, 30, 80],
            [0, 30, 81],
            [1, 35, 60],
            [1, 35, 61],
            [3, 40, 90],
            [3, 50, 91],
            [3, 50, 92],
        ];
        RelationVersion::from_tuples(Schema::relation("A", 3), 4, rows.iter().map(|r| Tuple::new(r.to_vec()))).unwrap()
    }

    fn apply(v: &RelationVersion, erase: &[[i64; 3]], insert: &[[i64; 3]]) -> RelationVersion {
        let mut txn = v.begin();
        for e in erase {
            assert!(txn.erase(&Tuple::new(e.to_vec())).unwrap());
        }
        for i in insert {
            assert!(txn.insert(Tuple::new(i.to_vec())).unwrap());
        }
        txn.commit()
    }

    fn render(it: impl Iterator<Item = Change>) -> Vec<String> {
        it.map(|c| c.to_string()).collect()
    }

    #[test]
    fn worked_versions_produce_listed_streams() {
        let v1 = version1();
        let v2 = apply(&v1, &[[0, 30, 81], [3, 40, 90], [3, 50, 92]], &[[4, 60, 71]]);
        assert_eq!(
            render(delta_iter(&v1, &v2).unwrap()),
            ["ERASE 0-30-81", "ERASE 3-40-90", "ERASE 3-50-92", "INSERT 4-60-71"]
        );
        assert_eq!(
            render(surgery_iter(&v1, &v2).unwrap()),
            [
                "ERASE 0-30-81",
                "ERASE 3-40-90",
                "ERASE 3-40",
                "ERASE 3-50-92",
                "INSERT 4",
                "INSERT 4-60",
                "INSERT 4-60-71"
            ]
        );
    }

    #[test]
    fn identical_versions_have_no_delta() {
        let v = version1();
        let w = v.begin().commit();
        let mut it = delta_iter(&v, &w).unwrap();
        assert!(it.next().is_none());
        assert_eq!(it.pages_touched(), 0);
    }

    #[test]
    fn fresh_branch_yields_one_surgery_per_depth() {
        let v = RelationVersion::empty(Schema::relation("A", 3));
        let w = apply(&v, &[], &[[1, 2, 3]]);
        assert_eq!(render(surgery_iter(&v, &w).unwrap()), ["INSERT 1", "INSERT 1-2", "INSERT 1-2-3"]);
    }

    #[test]
    fn other_lineage_is_rejected() {
        let a = RelationVersion::empty(Schema::relation("A", 1));
        let b = RelationVersion::empty(Schema::relation("A", 1));
        assert!(matches!(delta_iter(&a, &b), Err(Error::Lineage)));
    }

    #[test]
    fn changed_function_value_is_erase_then_insert() {
        use crate::key::Value;
        let v = RelationVersion::from_tuples(
            Schema::function("F", 1),
            8,
            [Tuple::with_value(vec![1], Value::Int(3)), Tuple::with_value(vec![2], Value::Int(4))],
        )
        .unwrap();
        let mut txn = v.begin();
        txn.erase(&Tuple::new(vec![1])).unwrap();
        txn.insert(Tuple::with_value(vec![1], Value::Int(5))).unwrap();
        let w = txn.commit();
        assert_eq!(render(delta_iter(&v, &w).unwrap()), ["ERASE 1=3", "INSERT 1=5"]);
        assert_eq!(render(surgery_iter(&v, &w).unwrap()), ["ERASE 1=3", "INSERT 1=5"]);
    }

    fn nodes(v: &RelationVersion) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        v.for_each(|t| {
            for d in 1..=t.keys.len() {
                out.insert(t.keys[..d].to_vec());
            }
        });
        out
    }

    #[test]
    fn random_pairs_match_naive_differences() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for round in 0..60 {
            let n = (next() % 400) as usize;
            let rows: Vec<Tuple> = (0..n)
                .map(|_| Tuple::new(vec![(next() % 6) as i64, (next() % 6) as i64, (next() % 20) as i64]))
                .collect();
            let v = RelationVersion::from_tuples(Schema::relation("A", 3), 4 + round % 5, rows).unwrap();
            let mut txn = v.begin();
            for _ in 0..(next() % 30) {
                let t = Tuple::new(vec![(next() % 7) as i64, (next() % 6) as i64, (next() % 20) as i64]);
                if next() % 2 == 0 {
                    txn.insert(t).unwrap();
                } else {
                    txn.erase(&t).unwrap();
                }
            }
            let w = txn.commit();
            let before: BTreeSet<Tuple> = v.tuples().into_iter().collect();
            let after: BTreeSet<Tuple> = w.tuples().into_iter().collect();
            let mut expect: Vec<Change> = before
                .difference(&after)
                .map(|t| Change { delta: Delta::Erase, tuple: t.clone() })
                .chain(after.difference(&before).map(|t| Change { delta: Delta::Insert, tuple: t.clone() }))
                .collect();
            expect.sort_by(|a, b| a.tuple.cmp(&b.tuple));
            let got: Vec<Change> = delta_iter(&v, &w).unwrap().collect();
            assert_eq!(got, expect);

            // Replaying surgeries on the old node set gives the new node set.
            let mut set = nodes(&v);
            for s in surgery_iter(&v, &w).unwrap() {
                let k = s.tuple.keys.clone();
                match s.delta {
                    Delta::Insert => {
                        assert!(k.len() == 1 || set.contains(&k[..k.len() - 1]));
                        assert!(set.insert(k));
                    }
                    Delta::Erase => {
                        assert!(set.remove(&k));
                        assert!(!set.iter().any(|n| n.len() > k.len() && n.starts_with(&k)));
                    }
                }
            }
            assert_eq!(set, nodes(&w));
        }
    }
}
