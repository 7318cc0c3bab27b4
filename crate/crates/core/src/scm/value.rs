use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// Largest universe a set value can range over (sets are stored as bitmasks).
pub const MAX_SET_UNIVERSE: u32 = 63;

/// A discrete domain value.
///
/// Sets are subsets of small non-negative integers, stored as a bitmask; they
/// serialize as sorted JSON arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Set(u64),
}

impl Value {
    /// Positivity used by the counting heuristics: `true`, a positive integer,
    /// or a non-empty set.
    pub fn is_positive(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(v) => v > 0,
            Value::Set(m) => m != 0,
        }
    }

    pub fn truthy(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(v) => v != 0,
            Value::Set(m) => m != 0,
        }
    }

    /// Numeric weight: 0/1 for booleans, the integer itself, or set cardinality.
    pub fn magnitude(self) -> i64 {
        match self {
            Value::Bool(b) => b as i64,
            Value::Int(v) => v,
            Value::Set(m) => m.count_ones() as i64,
        }
    }

    pub fn set_from(items: impl IntoIterator<Item = u32>) -> Value {
        Value::Set(items.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn set_members(self) -> Option<Vec<u32>> {
        match self {
            Value::Set(m) => Some((0..64).filter(|i| m & (1u64 << i) != 0).collect()),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Set(_) => {
                let members = self.set_members().unwrap_or_default();
                let parts: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            Value::Bool(b) => serializer.serialize_bool(b),
            Value::Int(v) => serializer.serialize_i64(v),
            Value::Set(m) => {
                let mut seq = serializer.serialize_seq(Some(m.count_ones() as usize))?;
                for i in 0..64u32 {
                    if m & (1u64 << i) != 0 {
                        seq.serialize_element(&i)?;
                    }
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a boolean, an integer, or an array of small non-negative integers")
            }

            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Value, E> {
                Ok(Value::Bool(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Value, E> {
                Ok(Value::Int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
                i64::try_from(v)
                    .map(Value::Int)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
                let mut mask = 0u64;
                while let Some(i) = seq.next_element::<u32>()? {
                    if i > MAX_SET_UNIVERSE {
                        return Err(de::Error::custom(format!("set element {i} exceeds 63")));
                    }
                    mask |= 1u64 << i;
                }
                Ok(Value::Set(mask))
            }
        }

        deserializer.deserialize_any(ValueVisitor)
    }
}

/// An ordered, finite domain. Values are addressed by their index.
///
/// The common shapes get a compact representation with O(1) index lookup;
/// anything else is an explicit list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    /// `[false, true]`
    Bool,
    /// `[min, min+1, ..., max]`
    IntRange {
        min: i64,
        max: i64,
    },
    /// Every subset of `{0, .., universe-1}` in binary-counting order of the
    /// characteristic vector, so the index of a set is its bitmask.
    Subsets {
        universe: u32,
    },
    Values(Vec<Value>),
}

impl Domain {
    /// Builds a domain from an explicit value list, recognising the compact shapes.
    pub fn from_values(values: Vec<Value>) -> Result<Domain, String> {
        if values.is_empty() {
            return Err("domain is empty".into());
        }
        let mut seen = values.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != values.len() {
            return Err("domain values are not distinct".into());
        }
        if values == [Value::Bool(false), Value::Bool(true)] {
            return Ok(Domain::Bool);
        }
        if let Value::Int(first) = values[0] {
            let consecutive = values
                .iter()
                .enumerate()
                .all(|(i, v)| *v == Value::Int(first + i as i64));
            if consecutive {
                return Ok(Domain::IntRange {
                    min: first,
                    max: first + values.len() as i64 - 1,
                });
            }
        }
        if values.len().is_power_of_two() && values.len() > 1 {
            let universe = values.len().trailing_zeros();
            let counting = values
                .iter()
                .enumerate()
                .all(|(i, v)| *v == Value::Set(i as u64));
            if counting && universe <= MAX_SET_UNIVERSE {
                return Ok(Domain::Subsets { universe });
            }
        }
        Ok(Domain::Values(values))
    }

    pub fn len(&self) -> usize {
        match self {
            Domain::Bool => 2,
            Domain::IntRange { min, max } => (max - min + 1) as usize,
            Domain::Subsets { universe } => 1usize << universe,
            Domain::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Domain::Bool)
    }

    /// The value at `index`. Panics when out of range.
    #[inline]
    pub fn value(&self, index: u32) -> Value {
        match self {
            Domain::Bool => {
                debug_assert!(index < 2);
                Value::Bool(index == 1)
            }
            Domain::IntRange { min, max } => {
                let v = min + index as i64;
                assert!(v <= *max, "domain index out of range");
                Value::Int(v)
            }
            Domain::Subsets { universe } => {
                assert!(
                    (index as u64) < (1u64 << universe),
                    "domain index out of range"
                );
                Value::Set(index as u64)
            }
            Domain::Values(v) => v[index as usize],
        }
    }

    #[inline]
    pub fn index_of(&self, value: Value) -> Option<u32> {
        match (self, value) {
            (Domain::Bool, Value::Bool(b)) => Some(b as u32),
            (Domain::IntRange { min, max }, Value::Int(v)) => {
                (v >= *min && v <= *max).then(|| (v - min) as u32)
            }
            (Domain::Subsets { universe }, Value::Set(m)) => {
                (m >> universe == 0).then_some(m as u32)
            }
            (Domain::Values(vs), v) => vs.iter().position(|x| *x == v).map(|i| i as u32),
            _ => None,
        }
    }

    pub fn values(&self) -> Vec<Value> {
        (0..self.len() as u32).map(|i| self.value(i)).collect()
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<Value>::deserialize(deserializer)?;
        Domain::from_values(values).map_err(de::Error::custom)
    }
}
