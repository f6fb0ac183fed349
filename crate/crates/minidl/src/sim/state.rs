//! Program states: total maps from variable names to numbers, in either
//! exact rational or IEEE float arithmetic.
//!
//! Exact mode backs everything that feeds a soundness claim (axiom fuzzing,
//! counterexample checking); float mode exists for the sandbox plant, whose
//! dynamics are chosen to be exactly representable anyway. States order and
//! compare deterministically in both modes so they can live in sets.

use crate::syntax::ast::VarName;
use crate::syntax::vars::VarSet;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NumMode {
    Exact,
    Float,
}

/// A numeric value in one of the two arithmetic modes.
#[derive(Debug, Clone)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    /// Exact view; floats convert when finite (dyadic floats are exact).
    pub fn as_exact(&self) -> Option<BigRational> {
        match self {
            Value::Exact(q) => Some(q.clone()),
            Value::Float(f) => BigRational::from_float(*f),
        }
    }

    /// Float view; rationals round to nearest.
    pub fn as_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Float(f) => *f,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            // Mixed modes should not meet in one set; order by tag for totality.
            (Value::Exact(_), Value::Float(_)) => Ordering::Less,
            (Value::Float(_), Value::Exact(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

/// A state: total on the variables of whatever it is evaluated against.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct State {
    pub mode: NumMode,
    values: BTreeMap<VarName, Value>,
}

impl State {
    pub fn new(mode: NumMode) -> State {
        State { mode, values: BTreeMap::new() }
    }

    pub fn exact<I>(pairs: I) -> State
    where
        I: IntoIterator<Item = (VarName, BigRational)>,
    {
        State {
            mode: NumMode::Exact,
            values: pairs.into_iter().map(|(x, q)| (x, Value::Exact(q))).collect(),
        }
    }

    pub fn float<I>(pairs: I) -> State
    where
        I: IntoIterator<Item = (VarName, f64)>,
    {
        State {
            mode: NumMode::Float,
            values: pairs.into_iter().map(|(x, v)| (x, Value::Float(v))).collect(),
        }
    }

    pub fn get(&self, x: &VarName) -> Option<&Value> {
        self.values.get(x)
    }

    pub fn set(&mut self, x: VarName, v: Value) {
        self.values.insert(x, v);
    }

    pub fn vars(&self) -> VarSet {
        self.values.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, &Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Drops primed entries (they exist only during ODE evolution).
    pub fn without_primes(&self) -> State {
        State {
            mode: self.mode,
            values: self.values.iter().filter(|(x, _)| !x.primed).map(|(x, v)| (x.clone(), v.clone())).collect(),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, v)) in self.values.iter().enumerate() {
            write!(f, "{}{x}:{v}", if i > 0 { ", " } else { "" })?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn states_order_deterministically() {
        let a = State::exact([(VarName::new("x"), rat(1, 2))]);
        let b = State::exact([(VarName::new("x"), rat(2, 3))]);
        assert!(a < b);
        let fa = State::float([(VarName::new("x"), 0.5)]);
        let fb = State::float([(VarName::new("x"), 0.5)]);
        assert_eq!(fa, fb);
    }

    #[test]
    fn dyadic_floats_convert_exactly() {
        let v = Value::Float(0.75);
        assert_eq!(v.as_exact(), Some(rat(3, 4)));
        assert_eq!(Value::Exact(rat(3, 4)).as_f64(), 0.75);
    }

    #[test]
    fn primes_are_dropped_after_evolution() {
        let mut s = State::exact([(VarName::new("x"), rat(1, 1))]);
        s.set(VarName::primed("x"), Value::Exact(rat(5, 1)));
        assert_eq!(s.len(), 2);
        let clean = s.without_primes();
        assert_eq!(clean.len(), 1);
        assert!(clean.get(&VarName::primed("x")).is_none());
    }
}
