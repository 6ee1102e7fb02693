//! Scan-trees: balanced binary trees caching semigroup sums of key ranges.
//!
//! Leaves are buckets of records in key order. Every branch caches the
//! combination of its children, so the sum over any key interval is the
//! combination of the maximal subtrees inside it plus the in-range part of
//! at most two boundary leaves.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::marker::PhantomData;
use std::ops::Bound;

use crate::error::{Error, Result};
use crate::key::Key;

/// An associative combine, with an inverse when the values form a group.
pub trait Semigroup {
    type V: Clone + fmt::Debug + PartialEq;
    fn combine(a: &Self::V, b: &Self::V) -> Self::V;
    fn inverse(_a: &Self::V) -> Option<Self::V> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaxOp<T>(PhantomData<T>);

impl<T: Ord + Clone + fmt::Debug> Semigroup for MaxOp<T> {
    type V = T;
    fn combine(a: &T, b: &T) -> T {
        if b > a { b.clone() } else { a.clone() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MinOp<T>(PhantomData<T>);

impl<T: Ord + Clone + fmt::Debug> Semigroup for MinOp<T> {
    type V = T;
    fn combine(a: &T, b: &T) -> T {
        if b < a { b.clone() } else { a.clone() }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CountOp;

impl Semigroup for CountOp {
    type V = u64;
    fn combine(a: &u64, b: &u64) -> u64 {
        a + b
    }
}

/// Wrapping 64-bit integer addition.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroupSumOp;

impl Semigroup for GroupSumOp {
    type V = i64;
    fn combine(a: &i64, b: &i64) -> i64 {
        a.wrapping_add(*b)
    }
    fn inverse(a: &i64) -> Option<i64> {
        Some(a.wrapping_neg())
    }
}

pub const DEFAULT_LEAF_TARGET: usize = 12;

/// Records `first..=last` by rank, covered by one cached value.
pub type Span = (usize, usize);

/// Cumulative work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanStats {
    /// Cached subtree values and boundary-leaf partial sums combined by
    /// range queries.
    pub combines: u64,
    /// Nodes entered by queries and descents.
    pub visits: u64,
    /// Branch values recomputed by point updates.
    pub recomputed: u64,
    /// Subtree rebuilds triggered by the balance rule.
    pub rebuilds: u64,
}

#[derive(Default)]
struct Counters {
    combines: Cell<u64>,
    visits: Cell<u64>,
    recomputed: Cell<u64>,
    rebuilds: Cell<u64>,
}

fn bump(c: &Cell<u64>, n: u64) {
    c.set(c.get() + n);
}

type Entry<V> = (Vec<Key>, V);

#[derive(Clone)]
struct Node<V> {
    len: usize,
    agg: V,
    lo: Vec<Key>,
    hi: Vec<Key>,
    kind: Kind<V>,
}

#[derive(Clone)]
enum Kind<V> {
    Leaf(Vec<Entry<V>>),
    Branch(Box<Node<V>>, Box<Node<V>>),
}

fn after_lo(k: &[Key], lo: Bound<&[Key]>) -> bool {
    match lo {
        Bound::Included(b) => k >= b,
        Bound::Excluded(b) => k > b,
        Bound::Unbounded => true,
    }
}

fn before_hi(k: &[Key], hi: Bound<&[Key]>) -> bool {
    match hi {
        Bound::Included(b) => k <= b,
        Bound::Excluded(b) => k < b,
        Bound::Unbounded => true,
    }
}

impl<V: Clone> Node<V> {
    fn leaf<S: Semigroup<V = V>>(entries: Vec<Entry<V>>) -> Self {
        let agg = fold::<S>(entries.iter().map(|e| &e.1)).expect("leaf is non-empty");
        Node {
            len: entries.len(),
            agg,
            lo: entries[0].0.clone(),
            hi: entries[entries.len() - 1].0.clone(),
            kind: Kind::Leaf(entries),
        }
    }

    fn branch<S: Semigroup<V = V>>(l: Box<Node<V>>, r: Box<Node<V>>) -> Self {
        Node {
            len: l.len + r.len,
            agg: S::combine(&l.agg, &r.agg),
            lo: l.lo.clone(),
            hi: r.hi.clone(),
            kind: Kind::Branch(l, r),
        }
    }

    /// Recompute cached fields from the children or bucket.
    fn refresh<S: Semigroup<V = V>>(&mut self) {
        match &self.kind {
            Kind::Leaf(e) => {
                self.len = e.len();
                self.agg = fold::<S>(e.iter().map(|e| &e.1)).expect("leaf is non-empty");
                self.lo = e[0].0.clone();
                self.hi = e[e.len() - 1].0.clone();
            }
            Kind::Branch(l, r) => {
                self.len = l.len + r.len;
                self.agg = S::combine(&l.agg, &r.agg);
                self.lo = l.lo.clone();
                self.hi = r.hi.clone();
            }
        }
    }

    fn drain_into(self, out: &mut Vec<Entry<V>>) {
        match self.kind {
            Kind::Leaf(mut e) => out.append(&mut e),
            Kind::Branch(l, r) => {
                l.drain_into(out);
                r.drain_into(out);
            }
        }
    }

    fn height(&self) -> usize {
        match &self.kind {
            Kind::Leaf(_) => 0,
            Kind::Branch(l, r) => 1 + l.height().max(r.height()),
        }
    }
}

fn fold<'a, S: Semigroup>(mut it: impl Iterator<Item = &'a S::V>) -> Option<S::V>
where
    S::V: 'a,
{
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, v| S::combine(&acc, v)))
}

/// Build a balanced subtree over sorted entries with at most `target`
/// records per leaf.
fn build<S: Semigroup>(mut entries: Vec<Entry<S::V>>, target: usize) -> Box<Node<S::V>> {
    let n = entries.len();
    if n <= target {
        return Box::new(Node::leaf::<S>(entries));
    }
    let right = entries.split_off(n / 2);
    let l = build::<S>(entries, target);
    let r = build::<S>(right, target);
    Box::new(Node::branch::<S>(l, r))
}

fn unbalanced<V>(l: &Node<V>, r: &Node<V>) -> bool {
    l.len > 2 * r.len || r.len > 2 * l.len
}

/// A scan-tree keyed by sentinel-aware key tuples.
pub struct ScanTree<S: Semigroup> {
    root: Option<Box<Node<S::V>>>,
    target: usize,
    counters: Counters,
    last_path: Vec<Span>,
    _op: PhantomData<S>,
}

impl<S: Semigroup> Default for ScanTree<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Semigroup> Clone for ScanTree<S> {
    fn clone(&self) -> Self {
        ScanTree {
            root: self.root.clone(),
            target: self.target,
            counters: Counters::default(),
            last_path: Vec::new(),
            _op: PhantomData,
        }
    }
}

impl<S: Semigroup> fmt::Debug for ScanTree<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScanTree")
            .field("len", &self.len())
            .field("height", &self.height())
            .finish()
    }
}

impl<S: Semigroup> ScanTree<S> {
    pub fn new() -> Self {
        Self::with_leaf_target(DEFAULT_LEAF_TARGET)
    }

    /// Records per leaf bucket after a rebuild; buckets split above twice
    /// this size.
    pub fn with_leaf_target(target: usize) -> Self {
        assert!(target >= 1);
        ScanTree {
            root: None,
            target,
            counters: Counters::default(),
            last_path: Vec::new(),
            _op: PhantomData,
        }
    }

    /// Build from entries sorted by strictly increasing key.
    pub fn from_sorted(entries: Vec<(Vec<Key>, S::V)>, target: usize) -> Result<Self> {
        if let Some(w) = entries.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::KeyExists(fmt_keys(&w[1].0)));
        }
        let mut t = Self::with_leaf_target(target);
        if !entries.is_empty() {
            t.root = Some(build::<S>(entries, target));
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.root.as_ref().map_or(0, |r| r.len)
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn height(&self) -> usize {
        self.root.as_ref().map_or(0, |r| r.height())
    }

    /// Combination of every record, or `None` when empty.
    pub fn total(&self) -> Option<&S::V> {
        self.root.as_ref().map(|r| &r.agg)
    }

    pub fn stats(&self) -> ScanStats {
        ScanStats {
            combines: self.counters.combines.get(),
            visits: self.counters.visits.get(),
            recomputed: self.counters.recomputed.get(),
            rebuilds: self.counters.rebuilds.get(),
        }
    }

    pub fn reset_stats(&self) {
        self.counters.combines.set(0);
        self.counters.visits.set(0);
        self.counters.recomputed.set(0);
        self.counters.rebuilds.set(0);
    }

    /// Rank spans of the branches recomputed by the last point update,
    /// bottom-up.
    pub fn last_update_path(&self) -> &[Span] {
        &self.last_path
    }

    pub fn get(&self, key: &[Key]) -> Option<&S::V> {
        let mut node = self.root.as_deref()?;
        loop {
            match &node.kind {
                Kind::Leaf(e) => {
                    return e
                        .binary_search_by(|x| x.0.as_slice().cmp(key))
                        .ok()
                        .map(|i| &e[i].1)
                }
                Kind::Branch(l, r) => node = if key < r.lo.as_slice() { l } else { r },
            }
        }
    }

    pub fn contains(&self, key: &[Key]) -> bool {
        self.get(key).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Key], &S::V)> {
        let mut out = Vec::with_capacity(self.len());
        fn walk<'a, V>(n: &'a Node<V>, out: &mut Vec<(&'a [Key], &'a V)>) {
            match &n.kind {
                Kind::Leaf(e) => out.extend(e.iter().map(|(k, v)| (k.as_slice(), v))),
                Kind::Branch(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        if let Some(r) = &self.root {
            walk(r, &mut out);
        }
        out.into_iter()
    }

    pub fn insert(&mut self, key: Vec<Key>, value: S::V) -> Result<()> {
        self.last_path.clear();
        let Some(root) = self.root.as_mut() else {
            self.root = Some(Box::new(Node::leaf::<S>(vec![(key, value)])));
            return Ok(());
        };
        insert_rec::<S>(root, key, value, self.target, 0, &mut self.last_path, &self.counters)
    }

    /// Remove a record and return its value.
    pub fn erase(&mut self, key: &[Key]) -> Result<S::V> {
        self.last_path.clear();
        let Some(root) = self.root.as_mut() else {
            return Err(Error::KeyAbsent(fmt_keys(key)));
        };
        let (v, emptied) = erase_rec::<S>(root, key, self.target, 0, &mut self.last_path, &self.counters)?;
        if emptied {
            self.root = None;
        }
        Ok(v)
    }

    /// Change the value of an existing record and return the old value.
    pub fn replace(&mut self, key: &[Key], value: S::V) -> Result<S::V> {
        self.last_path.clear();
        let Some(root) = self.root.as_mut() else {
            return Err(Error::KeyAbsent(fmt_keys(key)));
        };
        replace_rec::<S>(root, key, value, 0, &mut self.last_path, &self.counters)
    }

    /// Combination of all records with keys in `[lo, hi]`; `None` when the
    /// interval holds no records.
    pub fn range_scan(&self, lo: &[Key], hi: &[Key]) -> Result<Option<S::V>> {
        if lo > hi {
            return Err(Error::InvalidInterval {
                lo: fmt_keys(lo),
                hi: fmt_keys(hi),
            });
        }
        Ok(self.fold_range(Bound::Included(lo), Bound::Included(hi)))
    }

    /// Like [`range_scan`](Self::range_scan), also reporting the rank span
    /// of every piece combined, in order.
    pub fn range_probe(&self, lo: &[Key], hi: &[Key]) -> Result<(Option<S::V>, Vec<Span>)> {
        if lo > hi {
            return Err(Error::InvalidInterval {
                lo: fmt_keys(lo),
                hi: fmt_keys(hi),
            });
        }
        let mut acc = None;
        let mut spans = Vec::new();
        if let Some(r) = &self.root {
            self.fold_rec(r, Bound::Included(lo), Bound::Included(hi), 0, &mut acc, Some(&mut spans));
        }
        Ok((acc, spans))
    }

    pub fn fold_range(&self, lo: Bound<&[Key]>, hi: Bound<&[Key]>) -> Option<S::V> {
        let mut acc = None;
        if let Some(r) = &self.root {
            self.fold_rec(r, lo, hi, 0, &mut acc, None);
        }
        acc
    }

    fn fold_rec(
        &self,
        n: &Node<S::V>,
        lo: Bound<&[Key]>,
        hi: Bound<&[Key]>,
        rank: usize,
        acc: &mut Option<S::V>,
        mut spans: Option<&mut Vec<Span>>,
    ) {
        bump(&self.counters.visits, 1);
        if !after_lo(&n.hi, lo) || !before_hi(&n.lo, hi) {
            return;
        }
        let push = |acc: &mut Option<S::V>, v: &S::V| {
            *acc = Some(match acc.take() {
                Some(a) => S::combine(&a, v),
                None => v.clone(),
            });
        };
        if after_lo(&n.lo, lo) && before_hi(&n.hi, hi) {
            bump(&self.counters.combines, 1);
            push(acc, &n.agg);
            if let Some(s) = spans {
                s.push((rank, rank + n.len - 1));
            }
            return;
        }
        match &n.kind {
            Kind::Leaf(e) => {
                let mut any = false;
                for (i, (k, v)) in e.iter().enumerate() {
                    if after_lo(k, lo) && before_hi(k, hi) {
                        any = true;
                        push(acc, v);
                        if let Some(s) = spans.as_deref_mut() {
                            s.push((rank + i, rank + i));
                        }
                    }
                }
                if any {
                    bump(&self.counters.combines, 1);
                }
            }
            Kind::Branch(l, r) => {
                self.fold_rec(l, lo, hi, rank, acc, spans.as_deref_mut());
                self.fold_rec(r, lo, hi, rank + l.len, acc, spans);
            }
        }
    }

    /// Visit records with keys in `[lo, hi]` in key order, skipping every
    /// subtree whose cached value satisfies `prune`.
    pub fn visit_range(
        &self,
        lo: &[Key],
        hi: &[Key],
        prune: impl Fn(&S::V) -> bool,
        mut f: impl FnMut(&[Key], &S::V),
    ) {
        fn rec<S: Semigroup>(
            t: &ScanTree<S>,
            n: &Node<S::V>,
            lo: &[Key],
            hi: &[Key],
            prune: &dyn Fn(&S::V) -> bool,
            f: &mut dyn FnMut(&[Key], &S::V),
        ) {
            bump(&t.counters.visits, 1);
            if n.hi.as_slice() < lo || n.lo.as_slice() > hi || prune(&n.agg) {
                return;
            }
            match &n.kind {
                Kind::Leaf(e) => {
                    for (k, v) in e {
                        if k.as_slice() >= lo && k.as_slice() <= hi && !prune(v) {
                            f(k, v);
                        }
                    }
                }
                Kind::Branch(l, r) => {
                    rec(t, l, lo, hi, prune, f);
                    rec(t, r, lo, hi, prune, f);
                }
            }
        }
        if let Some(r) = &self.root {
            rec(self, r, lo, hi, &prune, &mut f);
        }
    }

    /// Check cached values, key order, sizes and the balance rule against
    /// a full recomputation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        fn rec<S: Semigroup>(n: &Node<S::V>, target: usize) -> std::result::Result<Vec<Entry<S::V>>, String> {
            let entries = match &n.kind {
                Kind::Leaf(e) => {
                    if e.is_empty() {
                        return Err("empty leaf".into());
                    }
                    if e.len() > 2 * target {
                        return Err(format!("leaf of {} exceeds split size", e.len()));
                    }
                    e.clone()
                }
                Kind::Branch(l, r) => {
                    if unbalanced(l, r) {
                        return Err(format!("children of {} and {} records", l.len, r.len));
                    }
                    let mut a = rec::<S>(l, target)?;
                    a.extend(rec::<S>(r, target)?);
                    a
                }
            };
            if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err("keys out of order".into());
            }
            if entries.len() != n.len {
                return Err("stale length".into());
            }
            if fold::<S>(entries.iter().map(|e| &e.1)).as_ref() != Some(&n.agg) {
                return Err(format!("stale cached value {:?}", n.agg));
            }
            if n.lo != entries[0].0 || n.hi != entries[entries.len() - 1].0 {
                return Err("stale key bounds".into());
            }
            Ok(entries)
        }
        match &self.root {
            None => Ok(()),
            Some(r) => rec::<S>(r, self.target).map(|_| ()),
        }
    }
}

fn fmt_keys(k: &[Key]) -> String {
    let parts: Vec<String> = k.iter().map(|k| k.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn rebalance<S: Semigroup>(node: &mut Box<Node<S::V>>, target: usize, counters: &Counters) {
    let needs = match &node.kind {
        Kind::Branch(l, r) => unbalanced(l, r),
        Kind::Leaf(_) => false,
    };
    if needs {
        bump(&counters.rebuilds, 1);
        let placeholder = Box::new(Node {
            len: 0,
            agg: node.agg.clone(),
            lo: Vec::new(),
            hi: Vec::new(),
            kind: Kind::Leaf(Vec::new()),
        });
        let old = std::mem::replace(node, placeholder);
        let mut entries = Vec::with_capacity(old.len);
        old.drain_into(&mut entries);
        *node = build::<S>(entries, target);
    }
}

fn insert_rec<S: Semigroup>(
    node: &mut Box<Node<S::V>>,
    key: Vec<Key>,
    value: S::V,
    target: usize,
    rank: usize,
    path: &mut Vec<Span>,
    counters: &Counters,
) -> Result<()> {
    match &mut node.kind {
        Kind::Leaf(e) => {
            let i = match e.binary_search_by(|x| x.0.cmp(&key)) {
                Ok(_) => return Err(Error::KeyExists(fmt_keys(&key))),
                Err(i) => i,
            };
            e.insert(i, (key, value));
            if e.len() > 2 * target {
                let entries = std::mem::take(e);
                *node = build::<S>(entries, target);
            } else {
                node.refresh::<S>();
            }
        }
        Kind::Branch(l, r) => {
            if key < r.lo {
                insert_rec::<S>(l, key, value, target, rank, path, counters)?;
            } else {
                let rr = rank + l.len;
                insert_rec::<S>(r, key, value, target, rr, path, counters)?;
            }
            node.refresh::<S>();
            bump(&counters.recomputed, 1);
            path.push((rank, rank + node.len - 1));
            rebalance::<S>(node, target, counters);
        }
    }
    Ok(())
}

fn erase_rec<S: Semigroup>(
    node: &mut Box<Node<S::V>>,
    key: &[Key],
    target: usize,
    rank: usize,
    path: &mut Vec<Span>,
    counters: &Counters,
) -> Result<(S::V, bool)> {
    match &mut node.kind {
        Kind::Leaf(e) => {
            let i = e
                .binary_search_by(|x| x.0.as_slice().cmp(key))
                .map_err(|_| Error::KeyAbsent(fmt_keys(key)))?;
            let (_, v) = e.remove(i);
            if e.is_empty() {
                return Ok((v, true));
            }
            node.refresh::<S>();
            Ok((v, false))
        }
        Kind::Branch(l, r) => {
            let go_left = key < r.lo.as_slice();
            let (v, emptied) = if go_left {
                erase_rec::<S>(l, key, target, rank, path, counters)?
            } else {
                let rr = rank + l.len;
                erase_rec::<S>(r, key, target, rr, path, counters)?
            };
            if emptied {
                let Kind::Branch(l, r) = std::mem::replace(&mut node.kind, Kind::Leaf(Vec::new())) else {
                    unreachable!()
                };
                *node = if go_left { r } else { l };
                return Ok((v, false));
            }
            // Fold an underfull bucket into a neighbouring bucket.
            if let (Kind::Leaf(a), Kind::Leaf(b)) = (&l.kind, &r.kind) {
                if (a.len() < target.div_ceil(2) || b.len() < target.div_ceil(2)) && a.len() + b.len() <= 2 * target {
                    let Kind::Branch(l, r) = std::mem::replace(&mut node.kind, Kind::Leaf(Vec::new())) else {
                        unreachable!()
                    };
                    let mut entries = Vec::with_capacity(l.len + r.len);
                    l.drain_into(&mut entries);
                    r.drain_into(&mut entries);
                    node.kind = Kind::Leaf(entries);
                    node.refresh::<S>();
                    return Ok((v, false));
                }
            }
            node.refresh::<S>();
            bump(&counters.recomputed, 1);
            path.push((rank, rank + node.len - 1));
            rebalance::<S>(node, target, counters);
            Ok((v, false))
        }
    }
}

fn replace_rec<S: Semigroup>(
    node: &mut Box<Node<S::V>>,
    key: &[Key],
    value: S::V,
    rank: usize,
    path: &mut Vec<Span>,
    counters: &Counters,
) -> Result<S::V> {
    let old = match &mut node.kind {
        Kind::Leaf(e) => {
            let i = e
                .binary_search_by(|x| x.0.as_slice().cmp(key))
                .map_err(|_| Error::KeyAbsent(fmt_keys(key)))?;
            let old = std::mem::replace(&mut e[i].1, value);
            node.refresh::<S>();
            return Ok(old);
        }
        Kind::Branch(l, r) => {
            if key < r.lo.as_slice() {
                replace_rec::<S>(l, key, value, rank, path, counters)?
            } else {
                let rr = rank + l.len;
                replace_rec::<S>(r, key, value, rr, path, counters)?
            }
        }
    };
    node.refresh::<S>();
    bump(&counters.recomputed, 1);
    path.push((rank, rank + node.len - 1));
    Ok(old)
}

impl ScanTree<CountOp> {
    /// Build a counting tree over a set of keys.
    pub fn count_set(keys: impl IntoIterator<Item = Vec<Key>>, target: usize) -> Result<Self> {
        let mut ks: Vec<Vec<Key>> = keys.into_iter().collect();
        ks.sort();
        ks.dedup();
        Self::from_sorted(ks.into_iter().map(|k| (k, 1)).collect(), target)
    }

    pub fn count_range(&self, lo: Bound<&[Key]>, hi: Bound<&[Key]>) -> u64 {
        self.fold_range(lo, hi).unwrap_or(0)
    }
}

type Frame<'a> = (&'a Node<u64>, Bound<Vec<Key>>, Bound<Vec<Key>>);

/// Keys of `t` missing from `s`, where `s` is expected to be a subset.
///
/// Each node of `t` owns the half-open key region between its own first
/// key and its right neighbour's. A region holding as many records in `s`
/// as in `t` is skipped without looking inside.
pub struct ComplementIter<'a> {
    s: &'a ScanTree<CountOp>,
    stack: Vec<Frame<'a>>,
    pending: VecDeque<Vec<Key>>,
    visits: u64,
    failed: bool,
}

pub fn complement_iter<'a>(t: &'a ScanTree<CountOp>, s: &'a ScanTree<CountOp>) -> ComplementIter<'a> {
    let mut stack = Vec::new();
    if let Some(r) = &t.root {
        stack.push((&**r, Bound::Unbounded, Bound::Unbounded));
    }
    ComplementIter {
        s,
        stack,
        pending: VecDeque::new(),
        visits: 0,
        failed: false,
    }
}

fn as_ref(b: &Bound<Vec<Key>>) -> Bound<&[Key]> {
    match b {
        Bound::Included(k) => Bound::Included(k.as_slice()),
        Bound::Excluded(k) => Bound::Excluded(k.as_slice()),
        Bound::Unbounded => Bound::Unbounded,
    }
}

fn fmt_region(lo: &Bound<Vec<Key>>, hi: &Bound<Vec<Key>>) -> String {
    let l = match lo {
        Bound::Included(k) => format!("[{}", fmt_keys(k)),
        Bound::Excluded(k) => format!("({}", fmt_keys(k)),
        Bound::Unbounded => "(-inf".to_string(),
    };
    let h = match hi {
        Bound::Included(k) => format!("{}]", fmt_keys(k)),
        Bound::Excluded(k) => format!("{})", fmt_keys(k)),
        Bound::Unbounded => "+inf)".to_string(),
    };
    format!("{l},{h}")
}

impl ComplementIter<'_> {
    /// Nodes and keys of `t` examined so far.
    pub fn key_visits(&self) -> u64 {
        self.visits
    }
}

impl Iterator for ComplementIter<'_> {
    type Item = Result<Vec<Key>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(k) = self.pending.pop_front() {
                return Some(Ok(k));
            }
            if self.failed {
                return None;
            }
            let (node, lo, hi) = self.stack.pop()?;
            self.visits += 1;
            let in_s = self.s.count_range(as_ref(&lo), as_ref(&hi));
            match in_s.cmp(&(node.len as u64)) {
                Ordering::Equal => continue,
                Ordering::Greater => {
                    self.failed = true;
                    return Some(Err(Error::NotSubset(fmt_region(&lo, &hi))));
                }
                Ordering::Less => {}
            }
            match &node.kind {
                Kind::Leaf(e) => {
                    for (k, _) in e {
                        self.visits += 1;
                        if !self.s.contains(k) {
                            self.pending.push_back(k.clone());
                        }
                    }
                }
                Kind::Branch(l, r) => {
                    let split = r.lo.clone();
                    self.stack.push((r, Bound::Included(split.clone()), hi));
                    self.stack.push((l, lo, Bound::Excluded(split)));
                }
            }
        }
    }
}
