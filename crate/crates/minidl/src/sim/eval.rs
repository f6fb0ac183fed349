//! Evaluation of terms and quantifier-free formulas in a state.

use super::state::{NumMode, State, Value};
use crate::syntax::ast::{pow_rational, Formula, Term, VarName};
use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` has no value in this state")]
    MissingVariable(VarName),
    #[error("formula is not quantifier- and program-free")]
    NotQuantifierFree,
    #[error("exact evaluation hit the non-finite float value of `{0}`")]
    NonFinite(VarName),
}

/// The value of a term in a state, in the state's arithmetic mode.
pub fn eval_term(s: &State, t: &Term) -> Result<Value, EvalError> {
    match s.mode {
        NumMode::Exact => eval_exact(s, t).map(Value::Exact),
        NumMode::Float => Ok(Value::Float(eval_f64(s, t)?)),
    }
}

fn lookup_exact(s: &State, x: &VarName) -> Result<BigRational, EvalError> {
    let v = s.get(x).ok_or_else(|| EvalError::MissingVariable(x.clone()))?;
    v.as_exact().ok_or_else(|| EvalError::NonFinite(x.clone()))
}

fn eval_exact(s: &State, t: &Term) -> Result<BigRational, EvalError> {
    Ok(match t {
        Term::Var(x) => lookup_exact(s, x)?,
        Term::Lit(q) => q.clone(),
        Term::Neg(a) => -eval_exact(s, a)?,
        Term::Plus(a, b) => eval_exact(s, a)? + eval_exact(s, b)?,
        Term::Minus(a, b) => eval_exact(s, a)? - eval_exact(s, b)?,
        Term::Times(a, b) => eval_exact(s, a)? * eval_exact(s, b)?,
        Term::Pow(a, e) => pow_rational(&eval_exact(s, a)?, *e),
    })
}

fn eval_f64(s: &State, t: &Term) -> Result<f64, EvalError> {
    Ok(match t {
        Term::Var(x) => {
            s.get(x).ok_or_else(|| EvalError::MissingVariable(x.clone()))?.as_f64()
        }
        Term::Lit(q) => num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN),
        Term::Neg(a) => -eval_f64(s, a)?,
        Term::Plus(a, b) => eval_f64(s, a)? + eval_f64(s, b)?,
        Term::Minus(a, b) => eval_f64(s, a)? - eval_f64(s, b)?,
        Term::Times(a, b) => eval_f64(s, a)? * eval_f64(s, b)?,
        Term::Pow(a, e) => eval_f64(s, a)?.powi(*e as i32),
    })
}

/// Truth of a quantifier- and program-free formula in a state.
pub fn holds_qf(s: &State, f: &Formula) -> Result<bool, EvalError> {
    // Float mode follows IEEE except that comparisons against NaN are all
    // false (conservative: an undefined value satisfies nothing).
    let cmp = |a: &Term, b: &Term, pred: fn(std::cmp::Ordering) -> bool| -> Result<bool, EvalError> {
        match s.mode {
            NumMode::Exact => Ok(pred(eval_exact(s, a)?.cmp(&eval_exact(s, b)?))),
            NumMode::Float => Ok(eval_f64(s, a)?
                .partial_cmp(&eval_f64(s, b)?)
                .map(pred)
                .unwrap_or(false)),
        }
    };
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(a, b) => cmp(a, b, |o| o.is_eq()),
        Formula::Neq(a, b) => cmp(a, b, |o| o.is_ne()),
        Formula::Geq(a, b) => cmp(a, b, |o| o.is_ge()),
        Formula::Gt(a, b) => cmp(a, b, |o| o.is_gt()),
        Formula::Leq(a, b) => cmp(a, b, |o| o.is_le()),
        Formula::Lt(a, b) => cmp(a, b, |o| o.is_lt()),
        Formula::Not(g) => Ok(!holds_qf(s, g)?),
        Formula::And(a, b) => Ok(holds_qf(s, a)? && holds_qf(s, b)?),
        Formula::Or(a, b) => Ok(holds_qf(s, a)? || holds_qf(s, b)?),
        Formula::Imply(a, b) => Ok(!holds_qf(s, a)? || holds_qf(s, b)?),
        Formula::Equiv(a, b) => Ok(holds_qf(s, a)? == holds_qf(s, b)?),
        Formula::Forall(..) | Formula::Exists(..) | Formula::Box_(..) | Formula::Diamond(..) => {
            Err(EvalError::NotQuantifierFree)
        }
    }
}
