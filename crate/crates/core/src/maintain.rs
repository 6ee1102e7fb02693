//! Maintenance rounds: build the change oracle from relation deltas and
//! sensitivity indices, re-evaluate inside it, and push the assignment
//! differences into the heads.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::heads::HeadState;
use crate::interval::SensRecord;
use crate::key::{Delta, Key, Value};
use crate::lftj::{evaluate, Assignment, EvalOptions, EvalOutput, Oracle, Sensitivities, Trace};
use crate::rule::{Operand, Plan};
use crate::store::{surgery_iter, RelationVersion};

/// Counters of one bootstrap or maintenance round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MaintenanceReport {
    /// Iterator operations of the old-body evaluation.
    pub ops_old: u64,
    /// Iterator operations of the new-body evaluation.
    pub ops_new: u64,
    pub oracle_intervals: u64,
    pub sens_consumed: u64,
    pub sens_added: u64,
    pub head_inserts: u64,
    pub head_erases: u64,
    /// Record-level changes across the body relations.
    pub delta_records: u64,
    /// Sensitivity records held before the round.
    pub sens_records: u64,
}

impl MaintenanceReport {
    pub fn ops(&self) -> u64 {
        self.ops_old + self.ops_new
    }
}

impl fmt::Display for MaintenanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ops_old={}", self.ops_old)?;
        writeln!(f, "ops_new={}", self.ops_new)?;
        writeln!(f, "oracle_intervals={}", self.oracle_intervals)?;
        writeln!(f, "sens_consumed={}", self.sens_consumed)?;
        writeln!(f, "sens_added={}", self.sens_added)?;
        writeln!(f, "head_inserts={}", self.head_inserts)?;
        writeln!(f, "head_erases={}", self.head_erases)?;
        writeln!(f, "delta_records={}", self.delta_records)?;
        write!(f, "sens_records={}", self.sens_records)
    }
}

/// A planned rule together with its heads and sensitivity indices.
#[derive(Clone, Debug)]
pub struct RuleEngine {
    plan: Plan,
    sens: Sensitivities,
    heads: Vec<HeadState>,
    /// Body versions, one per atom, as of the last round.
    inputs: Option<Vec<RelationVersion>>,
    /// Value slots read by the heads; other value slots are dropped when
    /// assignments are projected for short-circuit heads.
    head_values: BTreeSet<usize>,
    tracing: bool,
    last_traces: Vec<(String, Trace)>,
    last_oracle: Option<Oracle>,
}

impl RuleEngine {
    pub fn new(plan: Plan) -> Self {
        let nkeys = plan.depth();
        let heads = plan.heads.iter().map(|h| HeadState::new(h.clone(), nkeys)).collect();
        let head_values = plan
            .heads
            .iter()
            .filter_map(|h| match h.value {
                Some(Operand::Slot(s)) if s >= nkeys => Some(s),
                _ => None,
            })
            .collect();
        RuleEngine {
            sens: Sensitivities::new(&plan),
            plan,
            heads,
            inputs: None,
            head_values,
            tracing: false,
            last_traces: Vec::new(),
            last_oracle: None,
        }
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn heads(&self) -> &[HeadState] {
        &self.heads
    }

    pub fn head(&self, name: &str) -> Option<&HeadState> {
        self.heads.iter().find(|h| h.name() == name)
    }

    pub fn sensitivities(&self) -> &Sensitivities {
        &self.sens
    }

    pub fn is_bootstrapped(&self) -> bool {
        self.inputs.is_some()
    }

    /// Body versions used by the last round.
    pub fn inputs(&self) -> Option<&[RelationVersion]> {
        self.inputs.as_deref()
    }

    /// Keep traces of the evaluations in later rounds.
    pub fn set_tracing(&mut self, on: bool) {
        self.tracing = on;
    }

    /// Traces of the last round, labelled `old` and `new` (or `full`).
    pub fn last_traces(&self) -> &[(String, Trace)] {
        &self.last_traces
    }

    pub fn last_oracle(&self) -> Option<&Oracle> {
        self.last_oracle.as_ref()
    }

    /// Full evaluation on `versions`, filling heads and indices.
    pub fn bootstrap(&mut self, versions: Vec<RelationVersion>) -> Result<MaintenanceReport> {
        self.check_versions(&versions)?;
        let plan = self.plan.clone();
        self.heads = plan.heads.iter().map(|h| HeadState::new(h.clone(), plan.depth())).collect();
        let mut report = MaintenanceReport { sens_records: self.sens.len() as u64, ..Default::default() };
        report.sens_consumed = self.sens.len() as u64;
        self.sens.clear();
        let out = evaluate(&plan, &versions, EvalOptions { oracle: None, record: Some(&mut self.sens), trace: self.tracing })?;
        report.ops_new = out.ops;
        report.sens_added = out.sens_added;
        self.last_traces.clear();
        self.last_oracle = None;
        let deltas: Vec<(Assignment, Delta)> = self.project(out.assignments).into_iter().map(|a| (a, Delta::Insert)).collect();
        self.route(&deltas, &mut report)?;
        if let Some(t) = out.trace {
            self.last_traces.push(("full".into(), t));
        }
        self.inputs = Some(versions);
        Ok(report)
    }

    /// Bring heads and indices from the last round's versions to
    /// `versions`. Without the oracle both bodies are evaluated in full
    /// and the indices rebuilt.
    pub fn maintain(&mut self, versions: Vec<RelationVersion>, use_oracle: bool) -> Result<MaintenanceReport> {
        let old = self
            .inputs
            .clone()
            .ok_or_else(|| Error::Usage("rule has not been evaluated yet; run eval before maintain".into()))?;
        self.check_versions(&versions)?;
        for (o, n) in old.iter().zip(&versions) {
            if o.lineage() != n.lineage() {
                return Err(Error::Lineage);
            }
        }
        self.last_traces.clear();
        self.last_oracle = None;
        let mut report = MaintenanceReport { sens_records: self.sens.len() as u64, ..Default::default() };
        if old.iter().zip(&versions).all(|(o, n)| o.same_pages(n)) {
            self.inputs = Some(versions);
            return Ok(report);
        }
        let plan = self.plan.clone();
        let (before, after) = if use_oracle {
            let (oracle, consumed, changes) = self.build_oracle(&versions, true)?;
            report.sens_consumed = consumed;
            report.delta_records = changes;
            report.oracle_intervals = oracle.interval_count() as u64;
            let result = if oracle.is_empty() {
                (EvalOutput::default(), EvalOutput::default())
            } else {
                let before = evaluate(&plan, &old, EvalOptions { oracle: Some(&oracle), record: None, trace: self.tracing })?;
                let after =
                    evaluate(&plan, &versions, EvalOptions { oracle: Some(&oracle), record: Some(&mut self.sens), trace: self.tracing })?;
                (before, after)
            };
            self.last_oracle = Some(oracle);
            result
        } else {
            report.delta_records = count_changes(&old, &versions)?;
            report.sens_consumed = self.sens.len() as u64;
            self.sens.clear();
            let before = evaluate(&plan, &old, EvalOptions { oracle: None, record: None, trace: self.tracing })?;
            let after = evaluate(&plan, &versions, EvalOptions { oracle: None, record: Some(&mut self.sens), trace: self.tracing })?;
            (before, after)
        };
        report.ops_old = before.ops;
        report.ops_new = after.ops;
        report.sens_added = after.sens_added;
        for (name, t) in [("old", before.trace), ("new", after.trace)] {
            if let Some(t) = t {
                self.last_traces.push((name.into(), t));
            }
        }
        let deltas = diff(self.project(before.assignments), self.project(after.assignments));
        self.route(&deltas, &mut report)?;
        self.inputs = Some(versions);
        Ok(report)
    }

    /// Oracle for the changes from the last round's versions to
    /// `versions`, with the number of sensitivity records matched and the
    /// number of record changes seen. With `consume`, matched records are
    /// removed from the indices.
    pub fn build_oracle(&mut self, versions: &[RelationVersion], consume: bool) -> Result<(Oracle, u64, u64)> {
        let old = self.inputs.clone().ok_or_else(|| Error::Usage("rule has not been evaluated yet".into()))?;
        self.check_versions(versions)?;
        let plan = &self.plan;
        let sens = &mut self.sens;
        let lift = plan.short_circuit;
        let mut oracle = Oracle::new();
        let mut matched = 0u64;
        let mut changes = 0u64;
        let mut contribute = |prefix: &[i64], lo: Key, hi: Key| match lift {
            Some(s) if prefix.len() >= s => oracle.add(&prefix[..s - 1], Key::Fin(prefix[s - 1]), Key::Fin(prefix[s - 1])),
            _ => oracle.add(prefix, lo, hi),
        };
        for (i, ap) in plan.atoms.iter().enumerate() {
            if old[i].same_pages(&versions[i]) {
                continue;
            }
            for c in surgery_iter(&old[i], &versions[i])? {
                let keys = &c.tuple.keys;
                let li = keys.len() - 1;
                let x = keys[li];
                if keys.len() == ap.depths.len() {
                    changes += 1;
                }
                if !ap.indexed[li] {
                    contribute(&keys[..li], Key::Fin(x), Key::Fin(x));
                    continue;
                }
                let ix = sens
                    .index_mut(i, li)
                    .ok_or_else(|| Error::Config(format!("missing sensitivity index {}", ap.index_name(li, &plan.key_vars))))?;
                let hits: Vec<SensRecord> =
                    if consume { ix.stab_and_remove(&keys[..li], Key::Fin(x)) } else { ix.stab(&keys[..li], Key::Fin(x)) };
                matched += hits.len() as u64;
                let depth = ap.depths[li];
                for r in hits {
                    let mut prefix = vec![0; depth];
                    for (p, &d) in ap.alpha[li].iter().enumerate() {
                        prefix[d] = r.prefix[p];
                    }
                    for (p, &d) in ap.gamma[li].iter().enumerate() {
                        prefix[d] = r.context[p];
                    }
                    contribute(&prefix, r.lo, r.hi);
                }
            }
        }
        oracle.normalize();
        Ok((oracle, matched, changes))
    }

    /// Assignments as the heads see them. Under short-circuit evaluation
    /// only the head's key prefix and head values are kept.
    fn project(&self, mut asg: Vec<Assignment>) -> Vec<Assignment> {
        if let Some(s) = self.plan.short_circuit {
            let nkeys = self.plan.depth();
            for a in &mut asg {
                a.keys[s..].iter_mut().for_each(|k| *k = 0);
                for (i, v) in a.values.iter_mut().enumerate() {
                    if !self.head_values.contains(&(nkeys + i)) {
                        *v = Value::Int(0);
                    }
                }
            }
        }
        asg.sort();
        asg.dedup();
        asg
    }

    fn route(&mut self, deltas: &[(Assignment, Delta)], report: &mut MaintenanceReport) -> Result<()> {
        for h in &mut self.heads {
            let ch = h.apply(deltas)?;
            report.head_inserts += ch.inserts;
            report.head_erases += ch.erases;
        }
        Ok(())
    }

    fn check_versions(&self, versions: &[RelationVersion]) -> Result<()> {
        if versions.len() != self.plan.atoms.len() {
            return Err(Error::Config(format!("{} atoms but {} versions", self.plan.atoms.len(), versions.len())));
        }
        for (a, v) in self.plan.atoms.iter().zip(versions) {
            if v.schema().name != a.pred {
                return Err(Error::Config(format!("atom {} was given a version of {}", a.label, v.schema().name)));
            }
        }
        Ok(())
    }
}

fn count_changes(old: &[RelationVersion], new: &[RelationVersion]) -> Result<u64> {
    let mut n = 0;
    for (o, v) in old.iter().zip(new) {
        if !o.same_pages(v) {
            n += crate::store::delta_iter(o, v)?.count() as u64;
        }
    }
    Ok(n)
}

/// Ordered merge of two sorted assignment lists.
pub fn diff(old: Vec<Assignment>, new: Vec<Assignment>) -> Vec<(Assignment, Delta)> {
    let mut out = Vec::new();
    let mut a = old.into_iter().peekable();
    let mut b = new.into_iter().peekable();
    loop {
        let ord = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (Some(x), Some(y)) => x.cmp(y),
        };
        match ord {
            Ordering::Less => out.push((a.next().unwrap(), Delta::Erase)),
            Ordering::Greater => out.push((b.next().unwrap(), Delta::Insert)),
            Ordering::Equal => {
                a.next();
                b.next();
            }
        }
    }
    out
}
