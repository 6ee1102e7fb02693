//! Copy-on-write B+tree pages.
//!
//! Pages are shared between versions through `Arc`. Mutation goes through
//! `Arc::make_mut`, so a page that is still referenced by a committed
//! version is copied before it is touched and every untouched page stays
//! pointer-identical to its predecessor.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::key::Tuple;

#[derive(Clone, Debug)]
pub(crate) enum Page {
    Leaf {
        recs: Vec<Tuple>,
    },
    Branch {
        /// `mins[i]` is the smallest key stored under `kids[i]`.
        mins: Vec<Vec<i64>>,
        kids: Vec<Arc<Page>>,
        len: usize,
        height: u32,
    },
}

/// Compare the first `bound.len()` components of `keys` against `bound`.
#[inline]
pub(crate) fn cmp_prefix(keys: &[i64], bound: &[i64]) -> Ordering {
    keys[..bound.len()].cmp(bound)
}

impl Page {
    pub(crate) fn empty() -> Arc<Page> {
        Arc::new(Page::Leaf { recs: Vec::new() })
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            Page::Leaf { recs } => recs.len(),
            Page::Branch { len, .. } => *len,
        }
    }

    pub(crate) fn height(&self) -> u32 {
        match self {
            Page::Leaf { .. } => 0,
            Page::Branch { height, .. } => *height,
        }
    }

    fn entries(&self) -> usize {
        match self {
            Page::Leaf { recs } => recs.len(),
            Page::Branch { kids, .. } => kids.len(),
        }
    }

    pub(crate) fn min_key(&self) -> Option<&[i64]> {
        match self {
            Page::Leaf { recs } => recs.first().map(|t| t.keys.as_slice()),
            Page::Branch { mins, .. } => mins.first().map(Vec::as_slice),
        }
    }

    fn first(&self) -> Option<&Tuple> {
        match self {
            Page::Leaf { recs } => recs.first(),
            Page::Branch { kids, .. } => kids.first().and_then(|k| k.first()),
        }
    }

    pub(crate) fn get(&self, keys: &[i64]) -> Option<&Tuple> {
        match self {
            Page::Leaf { recs } => recs
                .binary_search_by(|t| t.keys.as_slice().cmp(keys))
                .ok()
                .map(|i| &recs[i]),
            Page::Branch { mins, kids, .. } => {
                let i = mins.partition_point(|m| m.as_slice() <= keys);
                if i == 0 {
                    None
                } else {
                    kids[i - 1].get(keys)
                }
            }
        }
    }

    /// First record whose key prefix is `>= bound` (or `> bound` when
    /// `strict`). `touched` counts pages visited.
    pub(crate) fn seek(&self, bound: &[i64], strict: bool, touched: &mut u64) -> Option<&Tuple> {
        *touched += 1;
        let before = |keys: &[i64]| match cmp_prefix(keys, bound) {
            Ordering::Less => true,
            Ordering::Equal => strict,
            Ordering::Greater => false,
        };
        match self {
            Page::Leaf { recs } => recs.get(recs.partition_point(|t| before(&t.keys))),
            Page::Branch { mins, kids, .. } => {
                let c = mins.partition_point(|m| before(m)).saturating_sub(1);
                if let Some(t) = kids[c].seek(bound, strict, touched) {
                    return Some(t);
                }
                kids.get(c + 1).and_then(|k| {
                    *touched += 1;
                    k.first()
                })
            }
        }
    }

    pub(crate) fn for_each<'a>(&'a self, f: &mut impl FnMut(&'a Tuple)) {
        match self {
            Page::Leaf { recs } => recs.iter().for_each(f),
            Page::Branch { kids, .. } => kids.iter().for_each(|k| k.for_each(f)),
        }
    }
}

fn branch_of(mins: Vec<Vec<i64>>, kids: Vec<Arc<Page>>) -> Page {
    let len = kids.iter().map(|k| k.len()).sum();
    let height = kids[0].height() + 1;
    Page::Branch {
        mins,
        kids,
        len,
        height,
    }
}

/// Insert a tuple whose keys are known to be absent. Returns the right
/// half when the page split.
pub(crate) fn insert(node: &mut Arc<Page>, t: Tuple, cap: usize) -> Option<Arc<Page>> {
    match Arc::make_mut(node) {
        Page::Leaf { recs } => {
            let i = recs.partition_point(|r| r.keys < t.keys);
            recs.insert(i, t);
            if recs.len() > cap {
                let right = recs.split_off(recs.len() / 2);
                return Some(Arc::new(Page::Leaf { recs: right }));
            }
            None
        }
        Page::Branch {
            mins, kids, len, ..
        } => {
            *len += 1;
            let i = mins
                .partition_point(|m| m.as_slice() <= t.keys.as_slice())
                .saturating_sub(1);
            if t.keys < mins[i] {
                mins[i] = t.keys.clone();
            }
            let split = insert(&mut kids[i], t, cap)?;
            mins.insert(i + 1, split.min_key().expect("split page is non-empty").to_vec());
            kids.insert(i + 1, split);
            if kids.len() > cap {
                let at = kids.len() / 2;
                let rk = kids.split_off(at);
                let rm = mins.split_off(at);
                *len = kids.iter().map(|k| k.len()).sum();
                return Some(Arc::new(branch_of(rm, rk)));
            }
            None
        }
    }
}

/// Remove the record with exactly these keys, which must be present.
pub(crate) fn remove(node: &mut Arc<Page>, keys: &[i64], cap: usize) -> Tuple {
    match Arc::make_mut(node) {
        Page::Leaf { recs } => {
            let i = recs
                .binary_search_by(|t| t.keys.as_slice().cmp(keys))
                .expect("remove of absent key");
            recs.remove(i)
        }
        Page::Branch {
            mins, kids, len, ..
        } => {
            let i = mins.partition_point(|m| m.as_slice() <= keys) - 1;
            let t = remove(&mut kids[i], keys, cap);
            *len -= 1;
            if kids[i].len() == 0 {
                kids.remove(i);
                mins.remove(i);
            } else {
                if mins[i].as_slice() == keys {
                    mins[i] = kids[i].min_key().unwrap().to_vec();
                }
                if kids[i].entries() < cap / 4 && kids.len() > 1 {
                    let l = if i + 1 < kids.len() { i } else { i - 1 };
                    merge_kids(mins, kids, l, cap);
                }
            }
            t
        }
    }
}

/// Merge `kids[l]` and `kids[l + 1]`, re-splitting evenly when the result
/// would overflow.
fn merge_kids(mins: &mut Vec<Vec<i64>>, kids: &mut Vec<Arc<Page>>, l: usize, cap: usize) {
    let right = kids.remove(l + 1);
    mins.remove(l + 1);
    let right = Arc::try_unwrap(right).unwrap_or_else(|shared| (*shared).clone());
    let left = Arc::make_mut(&mut kids[l]);
    let overflow = match (left, right) {
        (Page::Leaf { recs }, Page::Leaf { recs: mut more }) => {
            recs.append(&mut more);
            (recs.len() > cap).then(|| {
                let r = recs.split_off(recs.len() / 2);
                Arc::new(Page::Leaf { recs: r })
            })
        }
        (
            Page::Branch {
                mins: lm,
                kids: lk,
                len,
                ..
            },
            Page::Branch {
                mins: mut rm,
                kids: mut rk,
                len: rlen,
                ..
            },
        ) => {
            lm.append(&mut rm);
            lk.append(&mut rk);
            *len += rlen;
            (lk.len() > cap).then(|| {
                let at = lk.len() / 2;
                let k2 = lk.split_off(at);
                let m2 = lm.split_off(at);
                *len = lk.iter().map(|k| k.len()).sum();
                Arc::new(branch_of(m2, k2))
            })
        }
        _ => unreachable!("siblings have equal height"),
    };
    if let Some(r) = overflow {
        mins.insert(l + 1, r.min_key().unwrap().to_vec());
        kids.insert(l + 1, r);
    }
}

/// Grow a new root after a split.
pub(crate) fn grow_root(left: Arc<Page>, right: Arc<Page>) -> Arc<Page> {
    let mins = vec![
        left.min_key().unwrap().to_vec(),
        right.min_key().unwrap().to_vec(),
    ];
    Arc::new(branch_of(mins, vec![left, right]))
}

/// Collapse single-child branch roots.
pub(crate) fn shrink_root(root: &mut Arc<Page>) {
    loop {
        let only = match &**root {
            Page::Branch { kids, .. } if kids.len() == 1 => kids[0].clone(),
            Page::Branch { kids, .. } if kids.is_empty() => Page::empty(),
            _ => return,
        };
        *root = only;
    }
}

/// Build a packed tree from sorted, unique tuples.
pub(crate) fn bulk_load(recs: Vec<Tuple>, cap: usize) -> Arc<Page> {
    if recs.is_empty() {
        return Page::empty();
    }
    let fill = (cap * 3 / 4).max(2);
    let mut level: Vec<Arc<Page>> = Vec::new();
    let mut it = recs.into_iter().peekable();
    while it.peek().is_some() {
        let chunk: Vec<Tuple> = it.by_ref().take(fill).collect();
        level.push(Arc::new(Page::Leaf { recs: chunk }));
    }
    while level.len() > 1 {
        let mut next = Vec::new();
        let mut it = level.into_iter().peekable();
        while it.peek().is_some() {
            let kids: Vec<Arc<Page>> = it.by_ref().take(fill).collect();
            let mins = kids.iter().map(|k| k.min_key().unwrap().to_vec()).collect();
            next.push(Arc::new(branch_of(mins, kids)));
        }
        level = next;
    }
    level.pop().unwrap()
}

/// Structural audit used by tests: ordering, separator keys and fill.
#[cfg(test)]
pub(crate) fn audit(page: &Page, cap: usize, is_root: bool) -> usize {
    match page {
        Page::Leaf { recs } => {
            assert!(recs.windows(2).all(|w| w[0].keys < w[1].keys));
            assert!(recs.len() <= cap);
            recs.len()
        }
        Page::Branch {
            mins,
            kids,
            len,
            height,
        } => {
            assert_eq!(mins.len(), kids.len());
            assert!(kids.len() <= cap);
            assert!(is_root || !kids.is_empty());
            let mut total = 0;
            for (m, k) in mins.iter().zip(kids) {
                assert_eq!(Some(m.as_slice()), k.min_key());
                assert_eq!(k.height() + 1, *height);
                total += audit(k, cap, false);
            }
            assert!(mins.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(total, *len);
            total
        }
    }
}
