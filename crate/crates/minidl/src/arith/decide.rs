//! Layered decision procedure for quantifier-free real-arithmetic sequents.
//!
//! Cheap, always-terminating layers run first and the verdict records which
//! layer answered:
//!
//! 1. ground evaluation — no free variables, so exact evaluation settles it;
//! 2. polynomial normalization — a single-equation succedent whose two sides
//!    normalize identically is valid outright;
//! 3. Fourier–Motzkin with square abstraction;
//! 4. an external SMT solver, when one is configured.
//!
//! Every Invalid verdict carries a counterexample state that has been
//! re-checked against the sequent by exact evaluation, regardless of which
//! layer produced it. Adding layers can only turn Unknown into Valid or
//! Invalid, never flip a decided answer.

use super::fm::{falsifies, fm_decide};
use super::poly::poly_zero;
use super::smt::{smt_decide, SmtConfig, SmtError};
use crate::sim::state::{NumMode, State};
use crate::syntax::ast::{Formula, Sequent};
use crate::syntax::vars::free_vars;
use std::fmt;

/// Which layer settled the sequent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ground,
    PolyNormalize,
    FourierMotzkin,
    Smt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ground => "ground",
            Method::PolyNormalize => "poly",
            Method::FourierMotzkin => "fm",
            Method::Smt => "smt",
        })
    }
}

/// Outcome of arithmetic decision: proof, confirmed counterexample, or
/// honest failure with a reason.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Valid(Method),
    Invalid(State),
    Unknown(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid(m) => write!(f, "valid ({m})"),
            Verdict::Invalid(s) => write!(f, "invalid, counterexample {s}"),
            Verdict::Unknown(why) => write!(f, "unknown ({why})"),
        }
    }
}

/// Arithmetic backend configuration; `smt: None` stops after Fourier–Motzkin.
#[derive(Debug, Clone, Default)]
pub struct ArithConfig {
    pub smt: Option<SmtConfig>,
}

/// Runs the layered chain. Errors surface only from a configured solver
/// failing to run at all; everything else is a verdict.
pub fn decide_sequent(seq: &Sequent, cfg: &ArithConfig) -> Result<Verdict, SmtError> {
    if !seq.is_quantifier_free() {
        return Ok(Verdict::Unknown("goal is not quantifier-free".into()));
    }
    if seq.ante.iter().chain(&seq.succ).all(|f| free_vars(f).is_empty()) {
        let empty = State::new(NumMode::Exact);
        return Ok(if falsifies(seq, &empty) {
            Verdict::Invalid(empty)
        } else {
            Verdict::Valid(Method::Ground)
        });
    }
    if let [Formula::Eq(a, b)] = seq.succ.as_slice() {
        if poly_zero(a, b) {
            return Ok(Verdict::Valid(Method::PolyNormalize));
        }
    }
    let fm = fm_decide(seq);
    let reason = match fm {
        Verdict::Unknown(reason) => reason,
        decided => return Ok(decided),
    };
    if let Some(smt_cfg) = &cfg.smt {
        match smt_decide(seq, smt_cfg)? {
            Verdict::Unknown(smt_reason) => {
                return Ok(Verdict::Unknown(format!("{reason}; {smt_reason}")))
            }
            decided => return Ok(decided),
        }
    }
    Ok(Verdict::Unknown(reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_sequent;

    fn decide(s: &str) -> Verdict {
        decide_sequent(&parse_sequent(s).unwrap(), &ArithConfig::default()).unwrap()
    }

    #[test]
    fn ground_sequents_always_decide() {
        assert_eq!(decide("|- 1+1=2"), Verdict::Valid(Method::Ground));
        assert_eq!(decide("3>2 |- 2>3"), Verdict::Invalid(State::new(NumMode::Exact)));
        assert_eq!(decide("1>2 |- 2>3"), Verdict::Valid(Method::Ground));
    }

    #[test]
    fn single_equation_goals_close_by_normalization() {
        assert_eq!(decide("x>=0 |- 4*v=-2*v*(-2)"), Verdict::Valid(Method::PolyNormalize));
        assert_eq!(decide("|- (x+1)^2=x^2+2*x+1"), Verdict::Valid(Method::PolyNormalize));
    }

    #[test]
    fn conditional_equations_fall_through_to_fm() {
        // not a polynomial identity, but valid given the antecedent
        assert_eq!(decide("v=0 |- v^2=0"), Verdict::Valid(Method::FourierMotzkin));
    }

    #[test]
    fn linear_goals_use_fm() {
        assert_eq!(decide("x>=0, v>=1 |- x+v>=1"), Verdict::Valid(Method::FourierMotzkin));
    }

    #[test]
    fn quantified_goals_are_unknown() {
        assert!(matches!(decide("|- \\forall x x^2>=0"), Verdict::Unknown(_)));
    }

    #[test]
    fn unknown_without_smt_configured() {
        assert!(matches!(
            decide("2*g*x=2*g*H-v^2, x>=0, g>0 |- x<=H"),
            Verdict::Unknown(_)
        ));
    }

    #[test]
    fn counterexamples_are_confirmed_by_evaluation() {
        let seq = parse_sequent("x>0 |- x>=1").unwrap();
        let Verdict::Invalid(state) = decide("x>0 |- x>=1") else {
            panic!("expected counterexample")
        };
        assert!(falsifies(&seq, &state));
    }
}
