//! The syntactic differential of a polynomial term.

use super::ast::{Term, VarName};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot differentiate a term mentioning the primed variable {0}")]
pub struct PrimedInDifferential(pub VarName);

/// Computes `(t)'`: constants go to `0`, each variable `x` to `x'`, and the
/// sum/product/power rules apply recursively. The result is constant-folded
/// (so `(2*x)'` comes out as `2*x'` rather than `0*x + 2*x'`), which is what
/// the differential-induction rule expects to print.
///
/// The input may not already contain primed variables; there are no second
/// differentials.
pub fn differential(t: &Term) -> Result<Term, PrimedInDifferential> {
    Ok(raw(t)?.fold())
}

fn raw(t: &Term) -> Result<Term, PrimedInDifferential> {
    Ok(match t {
        Term::Var(x) => {
            if x.primed {
                return Err(PrimedInDifferential(x.clone()));
            }
            Term::Var(x.to_primed())
        }
        Term::Lit(_) => Term::int(0),
        Term::Neg(a) => Term::neg(raw(a)?),
        Term::Plus(a, b) => Term::plus(raw(a)?, raw(b)?),
        Term::Minus(a, b) => Term::minus(raw(a)?, raw(b)?),
        Term::Times(a, b) => Term::plus(
            Term::times(raw(a)?, (**b).clone()),
            Term::times((**a).clone(), raw(b)?),
        ),
        Term::Pow(a, e) => match e {
            0 => Term::int(0),
            1 => raw(a)?,
            e => Term::times(
                Term::times(Term::int(*e as i64), Term::pow((**a).clone(), e - 1)),
                raw(a)?,
            ),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::poly::{poly_normalize, poly_zero};

    #[test]
    fn square_differentiates_to_twice_times_prime() {
        // (v^2)' = 2*v*v'
        let got = differential(&Term::pow(Term::var("v"), 2)).unwrap();
        let expect = Term::times(
            Term::times(Term::int(2), Term::var("v")),
            Term::Var(VarName::primed("v")),
        );
        assert!(poly_zero(&got, &expect));
    }

    #[test]
    fn product_rule_on_constant_coefficients() {
        // (2g*x)' agrees with 2*(g'*x + g*x') as a polynomial
        let t = Term::times(Term::times(Term::int(2), Term::var("g")), Term::var("x"));
        let got = differential(&t).unwrap();
        let expect = Term::times(
            Term::int(2),
            Term::plus(
                Term::times(Term::Var(VarName::primed("g")), Term::var("x")),
                Term::times(Term::var("g"), Term::Var(VarName::primed("x"))),
            ),
        );
        assert!(poly_zero(&got, &expect));
    }

    #[test]
    fn differential_is_linear_over_sums() {
        let a = Term::times(Term::var("x"), Term::var("y"));
        let b = Term::pow(Term::var("x"), 3);
        let sum = differential(&Term::plus(a.clone(), b.clone())).unwrap();
        let parts = Term::plus(differential(&a).unwrap(), differential(&b).unwrap());
        assert_eq!(poly_normalize(&sum), poly_normalize(&parts));
    }

    #[test]
    fn literals_have_zero_differential() {
        assert_eq!(differential(&Term::int(7)).unwrap(), Term::int(0));
    }

    #[test]
    fn primed_input_is_rejected() {
        let t = Term::Var(VarName::primed("x"));
        assert!(differential(&t).is_err());
    }
}
