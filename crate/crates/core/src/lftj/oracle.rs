//! The change oracle: a nonmaterialized per-depth predicate.
//!
//! Each node holds the intervals admitted at its depth under one bound
//! prefix, plus child nodes for deeper contributions under single keys.
//! A key inside an interval admits every deeper binding beneath it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::key::{fmt_interval, Key};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleNode {
    /// Sorted, disjoint, non-adjacent once normalized.
    intervals: Vec<(i64, i64)>,
    children: BTreeMap<i64, OracleNode>,
    /// Intervals and child keys merged, for iteration.
    ranges: Vec<(i64, i64)>,
}

fn lift_lo(v: i64) -> Key {
    if v == i64::MIN {
        Key::Min
    } else {
        Key::Fin(v)
    }
}

fn lift_hi(v: i64) -> Key {
    if v == i64::MAX {
        Key::Max
    } else {
        Key::Fin(v)
    }
}

fn merge(mut v: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    v.sort_unstable();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

impl OracleNode {
    fn normalize(&mut self) {
        self.intervals = merge(std::mem::take(&mut self.intervals));
        let ivs = &self.intervals;
        let covered = |k: i64| {
            let i = ivs.partition_point(|iv| iv.1 < k);
            i < ivs.len() && ivs[i].0 <= k
        };
        self.children.retain(|k, _| !covered(*k));
        for c in self.children.values_mut() {
            c.normalize();
        }
        let mut all = self.intervals.clone();
        all.extend(self.children.keys().map(|&k| (k, k)));
        self.ranges = merge(all);
    }

    /// True when `k` lies in an interval at this depth.
    pub fn covers(&self, k: i64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.1 < k);
        i < self.intervals.len() && self.intervals[i].0 <= k
    }

    pub fn child(&self, k: i64) -> Option<&OracleNode> {
        self.children.get(&k)
    }

    pub fn ranges(&self) -> &[(i64, i64)] {
        &self.ranges
    }

    pub fn intervals(&self) -> impl Iterator<Item = (Key, Key)> + '_ {
        self.intervals.iter().map(|&(a, b)| (lift_lo(a), lift_hi(b)))
    }

    fn count(&self) -> usize {
        self.intervals.len() + self.children.values().map(OracleNode::count).sum::<usize>()
    }

    fn render(&self, prefix: &mut Vec<i64>, out: &mut String) {
        for (lo, hi) in self.intervals() {
            let p: Vec<String> = prefix.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "depth={} prefix=({}) {}", prefix.len() + 1, p.join(","), fmt_interval(lo, hi));
        }
        for (k, c) in &self.children {
            prefix.push(*k);
            c.render(prefix, out);
            prefix.pop();
        }
    }
}

/// Union of contributions `(depth, bound prefix, [lo, hi])`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Oracle {
    root: OracleNode,
    dirty: bool,
}

impl Oracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Admit `[lo, hi]` for the variable at depth `prefix.len()` under the
    /// given bindings of the shallower variables.
    pub fn add(&mut self, prefix: &[i64], lo: Key, hi: Key) {
        let (Some(lo), Some(hi)) = (lo.ceil_i64(), hi.floor_i64()) else { return };
        if lo > hi {
            return;
        }
        let mut node = &mut self.root;
        for &k in prefix {
            node = node.children.entry(k).or_default();
        }
        node.intervals.push((lo, hi));
        self.dirty = true;
    }

    /// Merge intervals and drop contributions shadowed by shallower ones.
    pub fn normalize(&mut self) {
        if self.dirty {
            self.root.normalize();
            self.dirty = false;
        }
    }

    pub fn root(&self) -> &OracleNode {
        assert!(!self.dirty, "oracle used before normalize");
        &self.root
    }

    pub fn is_empty(&self) -> bool {
        self.root.intervals.is_empty() && self.root.children.is_empty()
    }

    /// Number of intervals over all nodes.
    pub fn interval_count(&self) -> usize {
        self.root.count()
    }

    /// Whether a full key binding lies in the admitted region.
    pub fn admits(&self, keys: &[i64]) -> bool {
        let mut node = self.root();
        for &k in keys {
            if node.covers(k) {
                return true;
            }
            match node.child(k) {
                Some(c) => node = c,
                None => return false,
            }
        }
        false
    }

    /// One line per interval: `depth=<d> prefix=(<keys>) [lo,hi]`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.root().render(&mut Vec::new(), &mut out);
        out
    }
}

/// Iterates the keys of one oracle node without expanding intervals.
pub(crate) struct OracleCursor<'a> {
    ranges: &'a [(i64, i64)],
    idx: usize,
    cur: i64,
}

impl<'a> OracleCursor<'a> {
    pub(crate) fn new(node: &'a OracleNode) -> Self {
        let cur = node.ranges.first().map_or(0, |r| r.0);
        OracleCursor { ranges: &node.ranges, idx: 0, cur }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.idx >= self.ranges.len()
    }

    pub(crate) fn key(&self) -> i64 {
        self.cur
    }

    pub(crate) fn next(&mut self) {
        if self.at_end() {
            return;
        }
        if self.cur < self.ranges[self.idx].1 {
            self.cur += 1;
        } else {
            self.idx += 1;
            if let Some(r) = self.ranges.get(self.idx) {
                self.cur = r.0;
            }
        }
    }

    pub(crate) fn seek(&mut self, k: i64) {
        if self.at_end() || self.cur >= k {
            return;
        }
        self.idx += self.ranges[self.idx..].partition_point(|r| r.1 < k);
        if let Some(r) = self.ranges.get(self.idx) {
            self.cur = r.0.max(k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_renders() {
        let mut o = Oracle::new();
        o.add(&[], Key::Fin(6), Key::Max);
        o.add(&[], Key::Fin(2), Key::Fin(2));
        o.add(&[], Key::Fin(7), Key::Fin(9));
        o.normalize();
        assert_eq!(o.render(), "depth=1 prefix=() [2,2]\ndepth=1 prefix=() [6,+inf]\n");
        assert_eq!(o.interval_count(), 2);
        assert!(o.admits(&[2, 100]));
        assert!(!o.admits(&[3]));
    }

    #[test]
    fn adjacent_intervals_coalesce_and_shallow_shadows_deep() {
        let mut o = Oracle::new();
        o.add(&[], Key::Fin(1), Key::Fin(3));
        o.add(&[], Key::Fin(4), Key::Fin(5));
        o.add(&[2], Key::Fin(0), Key::Fin(0));
        o.add(&[9], Key::Min, Key::Fin(0));
        o.normalize();
        assert_eq!(o.render(), "depth=1 prefix=() [1,5]\ndepth=2 prefix=(9) [-inf,0]\n");
        assert_eq!(o.root().ranges(), [(1, 5), (9, 9)]);
        assert!(o.admits(&[9, -7]));
        assert!(!o.admits(&[9, 1]));
    }

    #[test]
    fn cursor_walks_ranges() {
        let mut o = Oracle::new();
        o.add(&[], Key::Fin(2), Key::Fin(3));
        o.add(&[], Key::Fin(10), Key::Fin(10));
        o.normalize();
        let mut c = OracleCursor::new(o.root());
        let mut seen = vec![c.key()];
        c.next();
        seen.push(c.key());
        c.next();
        seen.push(c.key());
        assert_eq!(seen, [2, 3, 10]);
        c.next();
        assert!(c.at_end());

        let mut c = OracleCursor::new(o.root());
        c.seek(4);
        assert_eq!(c.key(), 10);
        c.seek(11);
        assert!(c.at_end());
        assert!(OracleCursor::new(Oracle::new().root()).at_end());
    }
}
