//! Leapfrog triejoin.

mod eval;
mod oracle;
mod trace;

pub use eval::{evaluate, leapfrog_join, Assignment, EvalOptions, EvalOutput, Sensitivities};
pub use oracle::{Oracle, OracleNode};
pub use trace::{edit_distance, indel_distance, trace_distance, trace_indel_distance, Op, Trace, TraceEvent};

use crate::key::Value;

/// Navigation over the trie presentation of a relation.
///
/// Keys at one depth under one prefix are visited in strictly increasing
/// order. `seek` lands on the least key `>= k` at the current depth, or at
/// the end.
pub trait TrieIterator {
    fn open(&mut self);
    fn up(&mut self);
    fn next(&mut self);
    fn seek(&mut self, k: i64);
    fn at_end(&self) -> bool;
    fn key(&self) -> i64;
    fn depth(&self) -> usize;
    /// Value column of the current record, for function relations at full
    /// depth.
    fn value(&self) -> Option<Value> {
        None
    }
}
