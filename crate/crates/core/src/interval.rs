//! Interval indices answering stabbing queries.
//!
//! Records are kept in a scan-tree ordered by `(prefix, lo, hi, context)`
//! whose cached value is the largest `hi` beneath each node. Key order
//! already bounds `lo` from below, so a stab only descends into subtrees
//! inside the prefix range with `lo <= x` and a maximum `hi >= x`.

use std::fmt;

use crate::error::{Error, Result};
use crate::key::{fmt_interval, Key};
use crate::scan::{MaxOp, ScanStats, ScanTree};

/// One interval `[lo, hi]` under a fixed key prefix, with context keys
/// carried along as payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensRecord {
    pub prefix: Vec<i64>,
    pub lo: Key,
    pub hi: Key,
    pub context: Vec<i64>,
}

impl SensRecord {
    pub fn new(prefix: Vec<i64>, lo: Key, hi: Key, context: Vec<i64>) -> Self {
        SensRecord { prefix, lo, hi, context }
    }

    /// A plain interval with no prefix or context.
    pub fn interval(lo: Key, hi: Key) -> Self {
        Self::new(Vec::new(), lo, hi, Vec::new())
    }

    pub fn contains(&self, x: Key) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn key(&self) -> Vec<Key> {
        let mut k = Vec::with_capacity(self.prefix.len() + 2 + self.context.len());
        k.extend(self.prefix.iter().map(|&v| Key::Fin(v)));
        k.push(self.lo);
        k.push(self.hi);
        k.extend(self.context.iter().map(|&v| Key::Fin(v)));
        k
    }

    fn from_key(k: &[Key], m: usize) -> Self {
        let fin = |k: &Key| k.finite().expect("prefix and context keys are finite");
        SensRecord {
            prefix: k[..m].iter().map(fin).collect(),
            lo: k[m],
            hi: k[m + 1],
            context: k[m + 2..].iter().map(fin).collect(),
        }
    }
}

impl fmt::Display for SensRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_interval(self.lo, self.hi))
    }
}

/// A set of [`SensRecord`]s with fixed prefix and context lengths.
#[derive(Clone, Debug)]
pub struct IntervalIndex {
    prefix_len: usize,
    context_len: usize,
    tree: ScanTree<MaxOp<Key>>,
}

impl Default for IntervalIndex {
    fn default() -> Self {
        Self::new(0, 0)
    }
}

impl IntervalIndex {
    pub fn new(prefix_len: usize, context_len: usize) -> Self {
        IntervalIndex {
            prefix_len,
            context_len,
            tree: ScanTree::new(),
        }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    fn check(&self, r: &SensRecord) -> Result<()> {
        if r.lo > r.hi {
            return Err(Error::InvalidInterval {
                lo: r.lo.to_string(),
                hi: r.hi.to_string(),
            });
        }
        if r.prefix.len() != self.prefix_len || r.context.len() != self.context_len {
            return Err(Error::Arity {
                relation: "interval index".into(),
                expected: self.prefix_len + self.context_len,
                got: r.prefix.len() + r.context.len(),
            });
        }
        Ok(())
    }

    /// Add a record. Returns `false` when it was already present.
    pub fn add(&mut self, r: SensRecord) -> Result<bool> {
        self.check(&r)?;
        let key = r.key();
        if self.tree.contains(&key) {
            return Ok(false);
        }
        self.tree.insert(key, r.hi)?;
        Ok(true)
    }

    pub fn remove(&mut self, r: &SensRecord) -> bool {
        self.tree.erase(&r.key()).is_ok()
    }

    pub fn contains(&self, r: &SensRecord) -> bool {
        self.tree.contains(&r.key())
    }

    /// All records with this prefix whose interval contains `x`, in index
    /// order.
    pub fn stab(&self, prefix: &[i64], x: Key) -> Vec<SensRecord> {
        assert_eq!(prefix.len(), self.prefix_len, "stab prefix length");
        let mut lo: Vec<Key> = prefix.iter().map(|&v| Key::Fin(v)).collect();
        let mut hi = lo.clone();
        lo.push(Key::Min);
        hi.push(x);
        hi.extend(std::iter::repeat_n(Key::Max, self.context_len + 2));
        let mut out = Vec::new();
        let m = self.prefix_len;
        self.tree.visit_range(&lo, &hi, |max_hi| *max_hi < x, |k, _| out.push(SensRecord::from_key(k, m)));
        out
    }

    /// Stab and remove every record returned.
    pub fn stab_and_remove(&mut self, prefix: &[i64], x: Key) -> Vec<SensRecord> {
        let hits = self.stab(prefix, x);
        for r in &hits {
            self.tree.erase(&r.key()).expect("stabbed record is present");
        }
        hits
    }

    pub fn records(&self) -> Vec<SensRecord> {
        self.tree.iter().map(|(k, _)| SensRecord::from_key(k, self.prefix_len)).collect()
    }

    pub fn clear(&mut self) {
        self.tree = ScanTree::new();
    }

    pub fn stats(&self) -> ScanStats {
        self.tree.stats()
    }

    pub fn reset_stats(&self) {
        self.tree.reset_stats()
    }

    pub fn audit(&self) -> std::result::Result<(), String> {
        self.tree.audit()
    }
}
