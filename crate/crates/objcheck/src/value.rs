//! Runtime values carried by messages.
//!
//! Values received from external participants are collapsed to a single
//! abstract [`Value::Unknown`]; the language has no conditionals, so control
//! flow never inspects a value and the abstraction preserves every observable
//! label sequence while keeping state spaces finite.

use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Int(i64),
    Str(String),
    Unknown,
}

impl Value {
    /// Wildcard-aware comparison used by the refinement checker: equal, or
    /// either side Unknown.
    pub fn compatible(&self, other: &Value) -> bool {
        matches!(self, Value::Unknown) || matches!(other, Value::Unknown) || self == other
    }
}

/// Componentwise [`Value::compatible`], requiring equal arity.
pub fn payloads_compatible(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Unknown => write!(f, "?"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_is_a_wildcard_but_equality_is_structural() {
        assert_eq!(Value::Unknown, Value::Unknown);
        assert_ne!(Value::Int(0), Value::Unknown);
        assert!(Value::Int(0).compatible(&Value::Unknown));
        assert!(Value::Unknown.compatible(&Value::Str("1.0".into())));
        assert!(!Value::Int(0).compatible(&Value::Int(1)));
        assert!(payloads_compatible(
            &[Value::Int(0), Value::Unknown],
            &[Value::Unknown, Value::Str("x".into())]
        ));
        assert!(!payloads_compatible(&[Value::Int(0)], &[]));
    }
}
