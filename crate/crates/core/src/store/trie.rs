use super::RelationVersion;
use crate::key::{Tuple, Value};
use crate::lftj::TrieIterator;

/// Trie iterator over a committed version.
///
/// The position is the current record plus the open depth; the key at
/// depth `d` is component `d - 1` of that record. Moving up keeps the
/// record, since it still carries the parent prefix.
pub struct VersionTrie {
    v: RelationVersion,
    cur: Option<Tuple>,
    depth: usize,
    end: bool,
    /// `cur` is the first record under its prefix at the current depth.
    leading: bool,
    touched: u64,
}

impl VersionTrie {
    pub fn new(v: RelationVersion) -> Self {
        VersionTrie {
            v,
            cur: None,
            depth: 0,
            end: false,
            leading: true,
            touched: 0,
        }
    }

    pub fn version(&self) -> &RelationVersion {
        &self.v
    }

    /// Pages visited by seeks so far.
    pub fn pages_touched(&self) -> u64 {
        self.touched
    }

    fn land(&mut self, bound: &[i64], strict: bool, parent: usize) {
        let cur = self.cur.as_ref().expect("positioned");
        let prefix = cur.keys[..parent].to_vec();
        match self.v.seek(bound, strict, &mut self.touched) {
            Some(t) if t.keys.starts_with(&prefix) => {
                self.cur = Some(t.clone());
                self.end = false;
            }
            _ => self.end = true,
        }
        self.leading = true;
    }
}

impl TrieIterator for VersionTrie {
    fn open(&mut self) {
        assert!(!self.end, "open at end");
        assert!(self.depth < self.v.arity(), "open below the leaves");
        if self.depth == 0 {
            let mut touched = 0;
            self.cur = self.v.seek(&[], false, &mut touched).cloned();
            self.touched += touched;
            self.end = self.cur.is_none();
        } else if !self.leading {
            let cur = self.cur.as_ref().unwrap();
            let bound = cur.keys[..self.depth].to_vec();
            self.land(&bound, false, self.depth);
        }
        self.leading = true;
        self.depth += 1;
    }

    fn up(&mut self) {
        assert!(self.depth > 0, "up at root");
        self.depth -= 1;
        self.end = false;
        self.leading = false;
    }

    fn next(&mut self) {
        if self.end {
            return;
        }
        let bound = self.cur.as_ref().unwrap().keys[..self.depth].to_vec();
        self.land(&bound, true, self.depth - 1);
    }

    fn seek(&mut self, k: i64) {
        if self.end || self.key() >= k {
            return;
        }
        let cur = self.cur.as_ref().unwrap();
        let mut bound = cur.keys[..self.depth - 1].to_vec();
        bound.push(k);
        self.land(&bound, false, self.depth - 1);
    }

    fn at_end(&self) -> bool {
        self.end
    }

    fn key(&self) -> i64 {
        debug_assert!(!self.end);
        self.cur.as_ref().expect("positioned").keys[self.depth - 1]
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn value(&self) -> Option<Value> {
        self.cur.as_ref().and_then(|t| t.value)
    }
}
