//! Versioned, ordered relation storage with a trie presentation.
//!
//! A [`RelationVersion`] is an immutable snapshot backed by a copy-on-write
//! B+tree. Editing goes through a [`Transaction`]; committing produces a new
//! version that shares every untouched page with its base. The difference
//! between two versions of the same lineage is enumerated by
//! [`delta_iter`] (record level) and [`surgery_iter`] (trie level).

mod delta;
mod page;
mod trie;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use delta::{delta_iter, surgery_iter, Change, DeltaIter, SurgeryIter};
pub use trie::VersionTrie;

use crate::error::{Error, Result};
use crate::key::Tuple;
use page::Page;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

pub const DEFAULT_PAGE_CAPACITY: usize = 64;

/// Shape of a stored relation: key arity and whether records carry a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: String,
    pub arity: usize,
    pub functional: bool,
}

impl Schema {
    pub fn relation(name: impl Into<String>, arity: usize) -> Self {
        Schema {
            name: name.into(),
            arity,
            functional: false,
        }
    }

    pub fn function(name: impl Into<String>, arity: usize) -> Self {
        Schema {
            name: name.into(),
            arity,
            functional: true,
        }
    }

    fn check(&self, t: &Tuple) -> Result<()> {
        if t.keys.len() != self.arity {
            return Err(Error::Arity {
                relation: self.name.clone(),
                expected: self.arity,
                got: t.keys.len(),
            });
        }
        if self.functional && t.value.is_none() {
            return Err(Error::Type(format!("{} requires a value column", self.name)));
        }
        if !self.functional && t.value.is_some() {
            return Err(Error::Type(format!("{} does not take a value column", self.name)));
        }
        Ok(())
    }
}

/// An immutable committed snapshot of a relation.
#[derive(Clone)]
pub struct RelationVersion {
    lineage: u64,
    id: u64,
    schema: Arc<Schema>,
    root: Arc<Page>,
    cap: usize,
}

impl fmt::Debug for RelationVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationVersion")
            .field("relation", &self.schema.name)
            .field("id", &self.id)
            .field("len", &self.len())
            .finish()
    }
}

impl RelationVersion {
    pub fn empty(schema: Schema) -> Self {
        Self::with_capacity(schema, DEFAULT_PAGE_CAPACITY)
    }

    /// An empty first version with a chosen leaf/branch fan-out.
    pub fn with_capacity(schema: Schema, page_capacity: usize) -> Self {
        assert!(page_capacity >= 4, "page capacity must be at least 4");
        RelationVersion {
            lineage: fresh_id(),
            id: fresh_id(),
            schema: Arc::new(schema),
            root: Page::empty(),
            cap: page_capacity,
        }
    }

    /// Bulk-load a first version from arbitrary tuples (sorted and checked
    /// here).
    pub fn from_tuples(schema: Schema, page_capacity: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        let mut v = Self::with_capacity(schema, page_capacity);
        let mut recs: Vec<Tuple> = tuples.into_iter().collect();
        for t in &recs {
            v.schema.check(t)?;
        }
        recs.sort();
        recs.dedup();
        for w in recs.windows(2) {
            if w[0].keys == w[1].keys {
                return Err(Error::FunctionConflict {
                    relation: v.schema.name.clone(),
                    keys: w[0].keys.clone(),
                });
            }
        }
        v.root = page::bulk_load(recs, page_capacity);
        Ok(v)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn arity(&self) -> usize {
        self.schema.arity
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn lineage(&self) -> u64 {
        self.lineage
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when both versions share the same root page.
    pub fn same_pages(&self, other: &RelationVersion) -> bool {
        Arc::ptr_eq(&self.root, &other.root)
    }

    pub fn get(&self, keys: &[i64]) -> Option<&Tuple> {
        self.root.get(keys)
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.get(&t.keys).is_some_and(|s| s.value == t.value)
    }

    /// True when some record starts with `prefix`.
    pub fn has_prefix(&self, prefix: &[i64]) -> bool {
        let mut touched = 0;
        self.root
            .seek(prefix, false, &mut touched)
            .is_some_and(|t| t.keys.starts_with(prefix))
    }

    pub(crate) fn seek(&self, bound: &[i64], strict: bool, touched: &mut u64) -> Option<&Tuple> {
        self.root.seek(bound, strict, touched)
    }

    pub fn tuples(&self) -> Vec<Tuple> {
        let mut out = Vec::with_capacity(self.len());
        self.root.for_each(&mut |t| out.push(t.clone()));
        out
    }

    pub fn for_each<'a>(&'a self, mut f: impl FnMut(&'a Tuple)) {
        self.root.for_each(&mut f)
    }

    pub fn begin(&self) -> Transaction {
        Transaction {
            base: self.clone(),
            root: self.root.clone(),
        }
    }

    pub fn trie(&self) -> VersionTrie {
        VersionTrie::new(self.clone())
    }

    pub(crate) fn root(&self) -> &Arc<Page> {
        &self.root
    }

    #[cfg(test)]
    pub(crate) fn audit(&self) {
        let n = page::audit(&self.root, self.cap, true);
        assert_eq!(n, self.len());
    }

    /// Number of pages reachable from this version.
    pub fn page_count(&self) -> usize {
        fn walk(p: &Page) -> usize {
            match p {
                Page::Leaf { .. } => 1,
                Page::Branch { kids, .. } => 1 + kids.iter().map(|k| walk(k)).sum::<usize>(),
            }
        }
        walk(&self.root)
    }

    /// Pages of `self` that are not shared with `other`.
    pub fn pages_not_shared_with(&self, other: &RelationVersion) -> usize {
        fn collect(p: &Arc<Page>, out: &mut std::collections::HashSet<*const Page>) {
            out.insert(Arc::as_ptr(p));
            if let Page::Branch { kids, .. } = &**p {
                kids.iter().for_each(|k| collect(k, out));
            }
        }
        let mut theirs = std::collections::HashSet::new();
        collect(&other.root, &mut theirs);
        let mut mine = std::collections::HashSet::new();
        collect(&self.root, &mut mine);
        mine.difference(&theirs).count()
    }
}

/// Begin a mutable workspace over a committed version.
pub fn begin_txn(base: &RelationVersion) -> Transaction {
    base.begin()
}

/// A single-writer workspace derived from a committed version.
pub struct Transaction {
    base: RelationVersion,
    root: Arc<Page>,
}

impl Transaction {
    pub fn schema(&self) -> &Schema {
        &self.base.schema
    }

    pub fn get(&self, keys: &[i64]) -> Option<&Tuple> {
        self.root.get(keys)
    }

    pub fn len(&self) -> usize {
        self.root.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Insert a tuple. Returns `false` when it was already present.
    pub fn insert(&mut self, t: Tuple) -> Result<bool> {
        self.base.schema.check(&t)?;
        if let Some(existing) = self.root.get(&t.keys) {
            if existing.value == t.value {
                return Ok(false);
            }
            return Err(Error::FunctionConflict {
                relation: self.base.schema.name.clone(),
                keys: t.keys,
            });
        }
        if let Some(right) = page::insert(&mut self.root, t, self.base.cap) {
            let left = std::mem::replace(&mut self.root, Page::empty());
            self.root = page::grow_root(left, right);
        }
        Ok(true)
    }

    /// Erase a tuple. A value-less tuple erases a function record by keys.
    /// Returns `false` when nothing matched.
    pub fn erase(&mut self, t: &Tuple) -> Result<bool> {
        if t.keys.len() != self.base.schema.arity {
            return Err(Error::Arity {
                relation: self.base.schema.name.clone(),
                expected: self.base.schema.arity,
                got: t.keys.len(),
            });
        }
        match self.root.get(&t.keys) {
            Some(existing) if t.value.is_none() || existing.value == t.value => {}
            _ => return Ok(false),
        }
        page::remove(&mut self.root, &t.keys, self.base.cap);
        page::shrink_root(&mut self.root);
        Ok(true)
    }

    pub fn commit(self) -> RelationVersion {
        RelationVersion {
            lineage: self.base.lineage,
            id: fresh_id(),
            schema: self.base.schema,
            root: self.root,
            cap: self.base.cap,
        }
    }
}

/// A relation's linear chain of committed versions.
#[derive(Clone, Debug)]
pub struct Relation {
    versions: Vec<RelationVersion>,
}

impl Relation {
    pub fn new(schema: Schema) -> Self {
        Self::with_capacity(schema, DEFAULT_PAGE_CAPACITY)
    }

    pub fn with_capacity(schema: Schema, page_capacity: usize) -> Self {
        Relation {
            versions: vec![RelationVersion::with_capacity(schema, page_capacity)],
        }
    }

    pub fn schema(&self) -> &Schema {
        self.latest().schema()
    }

    pub fn latest(&self) -> &RelationVersion {
        self.versions.last().unwrap()
    }

    /// Position of the latest version in the chain (0 for the initial
    /// empty version).
    pub fn version_number(&self) -> usize {
        self.versions.len() - 1
    }

    pub fn version(&self, n: usize) -> Option<&RelationVersion> {
        self.versions.get(n)
    }

    pub fn begin(&self) -> Transaction {
        self.latest().begin()
    }

    /// Append a version committed from a transaction on the latest version.
    pub fn commit(&mut self, txn: Transaction) -> Result<&RelationVersion> {
        if txn.base.id != self.latest().id {
            return Err(Error::StaleBase(self.schema().name.clone()));
        }
        self.versions.push(txn.commit());
        Ok(self.latest())
    }
}
