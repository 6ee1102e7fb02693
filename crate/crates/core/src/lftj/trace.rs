//! Evaluation traces and the distance between two of them.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Open,
    Up,
    Next,
    Seek,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Open => "OPEN",
            Op::Up => "UP",
            Op::Next => "NEXT",
            Op::Seek => "SEEK",
        })
    }
}

/// One iterator transition. `to == None` means the iterator hit the end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub iter: u32,
    pub op: Op,
    pub depth: u32,
    pub from: Option<i64>,
    pub arg: Option<i64>,
    pub to: Option<i64>,
}

/// Events of one evaluation, with iterator names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub labels: Vec<String>,
    pub events: Vec<TraceEvent>,
}

fn opt(k: Option<i64>, none: &str) -> String {
    k.map_or_else(|| none.to_string(), |v| v.to_string())
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn line(&self, e: &TraceEvent) -> String {
        format!(
            "iter={} op={} depth={} from={} arg={} to={}",
            self.labels[e.iter as usize],
            e.op,
            e.depth,
            opt(e.from, "-"),
            opt(e.arg, "-"),
            opt(e.to, "END")
        )
    }

    /// Events split by iterator name, in order.
    pub fn per_iterator(&self) -> BTreeMap<&str, Vec<TraceEvent>> {
        let mut out: BTreeMap<&str, Vec<TraceEvent>> = BTreeMap::new();
        for e in &self.events {
            out.entry(self.labels[e.iter as usize].as_str()).or_default().push(*e);
        }
        out
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{}", self.line(e))?;
        }
        Ok(())
    }
}

/// Edit distance with unit insert, delete and substitute costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    banded(a, b, 1)
}

/// Edit distance with inserts and deletes only, as counted by a line
/// diff.
pub fn indel_distance<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    banded(a, b, 2)
}

/// Diagonal-band dynamic program. The band doubles until the distance
/// found fits inside it, so the cost is `O((|a|+|b|) * d)` after trimming
/// the common prefix and suffix.
fn banded<T: PartialEq>(a: &[T], b: &[T], sub: u64) -> u64 {
    let pre = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[pre..], &b[pre..]);
    let suf = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suf], &b[..b.len() - suf]);
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return (n + m) as u64;
    }
    let diff = n.abs_diff(m);
    let mut k = diff.max(1);
    loop {
        if let Some(d) = band(a, b, sub, k) {
            if d <= k as u64 {
                return d;
            }
        }
        if k >= n + m {
            return band(a, b, sub, n + m).expect("full band reaches the corner");
        }
        k = (k * 2).min(n + m);
    }
}

/// Distance restricted to cells with `|i - j| <= k`, if the corner is
/// inside the band.
fn band<T: PartialEq>(a: &[T], b: &[T], sub: u64, k: usize) -> Option<u64> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > k {
        return None;
    }
    const INF: u64 = u64::MAX / 4;
    let w = 2 * k + 1;
    // Row i holds columns j = i - k ..= i + k at offsets 0..w.
    let mut prev = vec![INF; w];
    let mut cur = vec![INF; w];
    for (o, cell) in prev.iter_mut().enumerate() {
        let j = o as isize - k as isize;
        if (0..=m as isize).contains(&j) {
            *cell = j as u64;
        }
    }
    for i in 1..=n {
        cur.fill(INF);
        for (o, cell) in cur.iter_mut().enumerate() {
            let j = i as isize + o as isize - k as isize;
            if j < 0 || j > m as isize {
                continue;
            }
            let j = j as usize;
            if j == 0 {
                *cell = i as u64;
                continue;
            }
            // prev row offsets: column j sits at offset o + 1.
            let up = prev.get(o + 1).copied().unwrap_or(INF) + 1;
            let diag = prev[o] + if a[i - 1] == b[j - 1] { 0 } else { sub };
            *cell = up.min(diag);
        }
        // Left moves run along the row.
        for o in 1..w {
            if cur[o - 1] < INF {
                cur[o] = cur[o].min(cur[o - 1] + 1);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let o = m + k - n;
    Some(prev[o])
}

/// Sum of per-iterator edit distances between two traces.
pub fn trace_distance(t1: &Trace, t2: &Trace) -> u64 {
    per_iterator_distance(t1, t2, edit_distance)
}

/// As [`trace_distance`], counting inserts and deletes only.
pub fn trace_indel_distance(t1: &Trace, t2: &Trace) -> u64 {
    per_iterator_distance(t1, t2, indel_distance)
}

fn per_iterator_distance(t1: &Trace, t2: &Trace, f: fn(&[EventKey], &[EventKey]) -> u64) -> u64 {
    let a = keyed(t1);
    let b = keyed(t2);
    let empty = Vec::new();
    let names: std::collections::BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
    names
        .into_iter()
        .map(|n| f(a.get(n).unwrap_or(&empty), b.get(n).unwrap_or(&empty)))
        .sum()
}

/// Events with the iterator index dropped, so traces with different
/// label numbering compare by name.
type EventKey = (Op, u32, Option<i64>, Option<i64>, Option<i64>);

fn keyed(t: &Trace) -> BTreeMap<&str, Vec<EventKey>> {
    t.per_iterator()
        .into_iter()
        .map(|(n, es)| (n, es.into_iter().map(|e| (e.op, e.depth, e.from, e.arg, e.to)).collect()))
        .collect()
}
