//! Keys, values and tuples shared by every layer of the engine.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

/// A totally ordered key: a finite 64-bit integer bracketed by two sentinels.
///
/// The sentinels never occur inside stored tuples. They only appear as
/// interval endpoints and as padding in range bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Min,
    Fin(i64),
    Max,
}

impl Key {
    pub fn finite(self) -> Option<i64> {
        match self {
            Key::Fin(v) => Some(v),
            _ => None,
        }
    }

    /// Smallest finite integer that is `>= self`.
    pub fn ceil_i64(self) -> Option<i64> {
        match self {
            Key::Min => Some(i64::MIN),
            Key::Fin(v) => Some(v),
            Key::Max => None,
        }
    }

    /// Largest finite integer that is `<= self`.
    pub fn floor_i64(self) -> Option<i64> {
        match self {
            Key::Min => None,
            Key::Fin(v) => Some(v),
            Key::Max => Some(i64::MAX),
        }
    }
}

impl From<i64> for Key {
    fn from(v: i64) -> Self {
        Key::Fin(v)
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Min => f.write_str("-inf"),
            Key::Fin(v) => write!(f, "{v}"),
            Key::Max => f.write_str("+inf"),
        }
    }
}

impl FromStr for Key {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-inf" => Ok(Key::Min),
            "+inf" | "inf" => Ok(Key::Max),
            _ => s.parse().map(Key::Fin),
        }
    }
}

/// Lift a finite key sequence into the sentinel-aware domain.
pub fn lift(keys: &[i64]) -> Vec<Key> {
    keys.iter().copied().map(Key::Fin).collect()
}

/// A value payload carried by function records (`F[x..]=v`).
#[derive(Clone, Copy, Debug)]
pub enum Value {
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(v),
            Value::Float(_) => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(v) => v as f64,
            Value::Float(v) => v,
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Int(a), Value::Float(b)) => (*a as f64).total_cmp(b).then(Ordering::Less),
            (Value::Float(a), Value::Int(b)) => a.total_cmp(&(*b as f64)).then(Ordering::Greater),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Int(v) => {
                0u8.hash(state);
                v.hash(state);
            }
            Value::Float(v) => {
                1u8.hash(state);
                v.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // Debug keeps a decimal point so the text reloads as a float.
            Value::Float(v) => write!(f, "{v:?}"),
        }
    }
}

impl FromStr for Value {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<i64>() {
            Ok(v) => Ok(Value::Int(v)),
            Err(_) => s.parse::<f64>().map(Value::Float),
        }
    }
}

/// A stored record: finite keys plus an optional function value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    pub keys: Vec<i64>,
    pub value: Option<Value>,
}

impl Tuple {
    pub fn new(keys: impl Into<Vec<i64>>) -> Self {
        Tuple {
            keys: keys.into(),
            value: None,
        }
    }

    pub fn with_value(keys: impl Into<Vec<i64>>, value: Value) -> Self {
        Tuple {
            keys: keys.into(),
            value: Some(value),
        }
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for k in &self.keys {
            if !first {
                f.write_str("\t")?;
            }
            first = false;
            write!(f, "{k}")?;
        }
        if let Some(v) = self.value {
            if !first {
                f.write_str("\t")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Direction of a change between two versions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Delta {
    /// Ordered first so that sorting a batch applies erases before inserts.
    Erase,
    Insert,
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delta::Insert => "INSERT",
            Delta::Erase => "ERASE",
        })
    }
}

/// Render an interval with sentinel-aware endpoints, e.g. `[-inf,0]`.
pub fn fmt_interval(lo: Key, hi: Key) -> String {
    format!("[{lo},{hi}]")
}
