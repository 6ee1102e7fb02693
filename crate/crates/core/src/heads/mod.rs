//! Head maintenance: turning assignment deltas into head updates.

mod scanagg;
mod segfloat;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub use scanagg::ScanBackedAggregate;
pub use segfloat::{x_segment, SegmentedFloat, HIGH_SEGMENT, LOW_SEGMENT};

use crate::error::{Error, Result};
use crate::key::{Delta, Tuple, Value};
use crate::lftj::Assignment;
use crate::rule::{AggKind, HeadKind, HeadPlan, Operand};
use crate::scan::{MaxOp, MinOp};
use crate::store::RelationVersion;

/// A counted head record: value plus the number of assignments producing it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Supported {
    pub value: Option<Value>,
    pub eta: u64,
}

/// Running group total plus its support count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupAcc {
    pub total: i64,
    pub eta: u64,
}

#[derive(Clone, Debug)]
enum Store {
    /// The visible relation is the store.
    Direct,
    Counted(BTreeMap<Vec<i64>, Supported>),
    Group(BTreeMap<Vec<i64>, GroupAcc>),
    Float(BTreeMap<Vec<i64>, (SegmentedFloat, u64)>),
    Max(ScanBackedAggregate<MaxOp<Value>>),
    Min(ScanBackedAggregate<MinOp<Value>>),
}

/// Visible record changes made by one batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeadChanges {
    pub inserts: u64,
    pub erases: u64,
}

/// One head predicate and its maintained state.
#[derive(Clone, Debug)]
pub struct HeadState {
    plan: HeadPlan,
    nkeys: usize,
    store: Store,
    visible: RelationVersion,
}

fn slot_value(a: &Assignment, nkeys: usize, o: Operand) -> Value {
    match o {
        Operand::Const(v) => v,
        Operand::Slot(s) if s < nkeys => Value::Int(a.keys[s]),
        Operand::Slot(s) => a.values[s - nkeys],
    }
}

impl HeadState {
    /// `nkeys` is the number of key variables of the rule.
    pub fn new(plan: HeadPlan, nkeys: usize) -> Self {
        let group = plan.keys.len();
        let store = match plan.kind {
            HeadKind::Direct | HeadKind::ShortCircuit => Store::Direct,
            HeadKind::Counted => Store::Counted(BTreeMap::new()),
            HeadKind::Agg(AggKind::Count | AggKind::GroupSum) => Store::Group(BTreeMap::new()),
            HeadKind::Agg(AggKind::FloatTotal) => Store::Float(BTreeMap::new()),
            HeadKind::Agg(AggKind::Max) => Store::Max(ScanBackedAggregate::new(nkeys, &[group])),
            HeadKind::Agg(AggKind::Min) => Store::Min(ScanBackedAggregate::new(nkeys, &[group])),
        };
        let visible = RelationVersion::empty(plan.schema.clone());
        HeadState { plan, nkeys, store, visible }
    }

    pub fn plan(&self) -> &HeadPlan {
        &self.plan
    }

    pub fn name(&self) -> &str {
        &self.plan.pred
    }

    /// The head as a relation version.
    pub fn version(&self) -> &RelationVersion {
        &self.visible
    }

    /// Support count per visible record, where the head keeps one.
    pub fn eta(&self, keys: &[i64]) -> Option<u64> {
        match &self.store {
            Store::Counted(m) => m.get(keys).map(|s| s.eta),
            Store::Group(m) => m.get(keys).map(|g| g.eta),
            Store::Float(m) => m.get(keys).map(|f| f.1),
            _ => None,
        }
    }

    pub fn has_eta(&self) -> bool {
        matches!(self.store, Store::Counted(_) | Store::Group(_) | Store::Float(_))
    }

    fn key_of(&self, a: &Assignment) -> Result<Vec<i64>> {
        self.plan
            .keys
            .iter()
            .map(|&o| {
                slot_value(a, self.nkeys, o)
                    .as_int()
                    .ok_or_else(|| Error::Type(format!("non-integer key for head {}", self.plan.pred)))
            })
            .collect()
    }

    fn value_of(&self, a: &Assignment) -> Option<Value> {
        self.plan.value.map(|o| slot_value(a, self.nkeys, o))
    }

    /// Apply a batch of assignment deltas. Erases go first.
    pub fn apply(&mut self, deltas: &[(Assignment, Delta)]) -> Result<HeadChanges> {
        let mut order: Vec<&(Assignment, Delta)> = deltas.iter().collect();
        order.sort_by_key(|(_, d)| *d);
        let pred = self.plan.pred.clone();
        let missing = |what: &dyn std::fmt::Display| Error::integrity(format!("{pred}: erase of absent record {what}"));
        let mut touched: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut scan_batch = Vec::new();
        for (a, d) in order {
            let keys = self.key_of(a)?;
            let value = self.value_of(a);
            match &mut self.store {
                Store::Direct => {
                    touched.insert(keys.clone());
                    let t = Tuple { keys, value };
                    let mut txn = self.visible.begin();
                    let ok = match d {
                        Delta::Erase => txn.erase(&t)? && txn.get(&t.keys).is_none(),
                        Delta::Insert => txn.get(&t.keys).is_none() && txn.insert(t.clone())?,
                    };
                    if !ok {
                        return Err(match d {
                            Delta::Erase => missing(&t),
                            Delta::Insert => Error::integrity(format!("{pred}: insert of present record {t}")),
                        });
                    }
                    self.visible = txn.commit();
                    continue;
                }
                Store::Counted(m) => match d {
                    Delta::Insert => match m.get_mut(&keys) {
                        Some(s) if s.value == value => s.eta += 1,
                        Some(_) => return Err(Error::FunctionConflict { relation: pred, keys }),
                        None => {
                            m.insert(keys.clone(), Supported { value, eta: 1 });
                        }
                    },
                    Delta::Erase => match m.get_mut(&keys) {
                        Some(s) if s.value == value => {
                            s.eta -= 1;
                            if s.eta == 0 {
                                m.remove(&keys);
                            }
                        }
                        _ => return Err(missing(&Tuple { keys, value })),
                    },
                },
                Store::Group(m) => {
                    let summand = match self.plan.kind {
                        HeadKind::Agg(AggKind::Count) => 1,
                        _ => value
                            .and_then(Value::as_int)
                            .ok_or_else(|| Error::Type(format!("{pred}: sum() needs integer values; use total() for floats")))?,
                    };
                    match d {
                        Delta::Insert => {
                            let g = m.entry(keys.clone()).or_insert(GroupAcc { total: 0, eta: 0 });
                            g.total = g.total.wrapping_add(summand);
                            g.eta += 1;
                        }
                        Delta::Erase => {
                            let g = m.get_mut(&keys).ok_or_else(|| Error::integrity(format!("{pred}: group {keys:?} has no support")))?;
                            g.total = g.total.wrapping_sub(summand);
                            g.eta -= 1;
                            if g.eta == 0 {
                                m.remove(&keys);
                            }
                        }
                    }
                }
                Store::Float(m) => {
                    let s = value.map(Value::as_f64).ok_or_else(|| Error::Type(format!("{pred}: total() needs a value")))?;
                    match d {
                        Delta::Insert => {
                            let g = m.entry(keys.clone()).or_default();
                            g.0.add(s)?;
                            g.1 += 1;
                        }
                        Delta::Erase => {
                            let g = m.get_mut(&keys).ok_or_else(|| Error::integrity(format!("{pred}: group {keys:?} has no support")))?;
                            g.0.sub(s)?;
                            g.1 -= 1;
                            if g.1 == 0 {
                                m.remove(&keys);
                            }
                        }
                    }
                }
                Store::Max(_) | Store::Min(_) => {
                    let v = value.ok_or_else(|| Error::Type(format!("{pred}: min/max need a value")))?;
                    // Intermediate key: group, then the remaining key variables.
                    let mut full = keys.clone();
                    let group: BTreeSet<usize> = self.plan.keys.iter().filter_map(|o| if let Operand::Slot(s) = o { Some(*s) } else { None }).collect();
                    full.extend((0..self.nkeys).filter(|s| !group.contains(s)).map(|s| a.keys[s]));
                    scan_batch.push((full, v, *d));
                }
            }
            touched.insert(keys);
        }
        match &mut self.store {
            Store::Direct => return Ok(count_direct(deltas)),
            Store::Max(agg) => {
                agg.apply(&scan_batch)?;
            }
            Store::Min(agg) => {
                agg.apply(&scan_batch)?;
            }
            _ => {}
        }
        self.sync(&touched)
    }

    fn current(&self, keys: &[i64]) -> Option<Option<Value>> {
        match &self.store {
            Store::Direct => self.visible.get(keys).map(|t| t.value),
            Store::Counted(m) => m.get(keys).map(|s| s.value),
            Store::Group(m) => m.get(keys).map(|g| {
                Some(Value::Int(if self.plan.kind == HeadKind::Agg(AggKind::Count) { g.eta as i64 } else { g.total }))
            }),
            Store::Float(m) => m.get(keys).map(|f| Some(Value::Float(f.0.to_float()))),
            Store::Max(agg) => agg.view(0).get(keys).map(|v| Some(*v)),
            Store::Min(agg) => agg.view(0).get(keys).map(|v| Some(*v)),
        }
    }

    /// Bring the visible relation in line with the store for `touched`.
    fn sync(&mut self, touched: &BTreeSet<Vec<i64>>) -> Result<HeadChanges> {
        let mut ch = HeadChanges::default();
        let mut txn = self.visible.begin();
        for k in touched {
            let want = self.current(k).map(|value| Tuple { keys: k.clone(), value });
            let have = txn.get(k).cloned();
            if want == have {
                continue;
            }
            if let Some(h) = have {
                txn.erase(&h)?;
                ch.erases += 1;
            }
            if let Some(w) = want {
                txn.insert(w)?;
                ch.inserts += 1;
            }
        }
        self.visible = txn.commit();
        Ok(ch)
    }

    /// Sorted tab-separated records; with `eta`, heads that keep support
    /// counts add a `#<eta>` column.
    pub fn render(&self, eta: bool) -> String {
        let mut out = String::new();
        for t in self.visible.tuples() {
            let _ = write!(out, "{t}");
            if eta {
                if let Some(n) = self.eta(&t.keys) {
                    let _ = write!(out, "\t#{n}");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn count_direct(deltas: &[(Assignment, Delta)]) -> HeadChanges {
    let mut ch = HeadChanges::default();
    for (_, d) in deltas {
        match d {
            Delta::Insert => ch.inserts += 1,
            Delta::Erase => ch.erases += 1,
        }
    }
    ch
}
