//! Min/max heads kept through an intermediate relation with cached scans.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::key::{lift, Delta, Key, Value};
use crate::scan::{ScanTree, Semigroup};

/// Full key tuples mapped to values, with one or more group-by views.
///
/// View `i` groups by the first `prefixes[i]` key columns. After each
/// batch only the touched groups are rescanned.
#[derive(Clone, Debug)]
pub struct ScanBackedAggregate<S: Semigroup<V = Value>> {
    arity: usize,
    tree: ScanTree<S>,
    views: Vec<(usize, BTreeMap<Vec<i64>, Value>)>,
}

impl<S: Semigroup<V = Value>> ScanBackedAggregate<S> {
    pub fn new(arity: usize, prefixes: &[usize]) -> Self {
        assert!(prefixes.iter().all(|&p| p <= arity), "view prefix longer than the key");
        ScanBackedAggregate {
            arity,
            tree: ScanTree::new(),
            views: prefixes.iter().map(|&p| (p, BTreeMap::new())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn view(&self, i: usize) -> &BTreeMap<Vec<i64>, Value> {
        &self.views[i].1
    }

    /// Apply a batch; returns the touched groups of every view.
    pub fn apply(&mut self, batch: &[(Vec<i64>, Value, Delta)]) -> Result<Vec<BTreeSet<Vec<i64>>>> {
        let mut touched = vec![BTreeSet::new(); self.views.len()];
        for (keys, value, delta) in batch {
            if keys.len() != self.arity {
                return Err(Error::Arity { relation: "intermediate".into(), expected: self.arity, got: keys.len() });
            }
            let k = lift(keys);
            match delta {
                Delta::Insert => {
                    if self.tree.contains(&k) {
                        return Err(Error::integrity(format!("intermediate record {keys:?} inserted twice")));
                    }
                    self.tree.insert(k, *value)?;
                }
                Delta::Erase => match self.tree.get(&k) {
                    Some(v) if v == value => {
                        self.tree.erase(&k)?;
                    }
                    _ => return Err(Error::integrity(format!("intermediate record {keys:?}={value} is absent"))),
                },
            }
            for (i, (p, _)) in self.views.iter().enumerate() {
                touched[i].insert(keys[..*p].to_vec());
            }
        }
        for (i, (p, map)) in self.views.iter_mut().enumerate() {
            for g in &touched[i] {
                let mut lo = lift(g);
                let mut hi = lo.clone();
                lo.extend(std::iter::repeat_n(Key::Min, self.arity - *p));
                hi.extend(std::iter::repeat_n(Key::Max, self.arity - *p));
                match self.tree.range_scan(&lo, &hi)? {
                    Some(v) => map.insert(g.clone(), v),
                    None => map.remove(g),
                };
            }
        }
        Ok(touched)
    }

    /// Scan-tree combine count so far.
    pub fn combines(&self) -> u64 {
        self.tree.stats().combines
    }
}
