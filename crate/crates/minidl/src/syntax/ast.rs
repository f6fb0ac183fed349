//! Abstract syntax for terms, formulas, and hybrid programs.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// A variable name: an identifier plus an optional single prime.
///
/// `x'` only ever denotes the time derivative of `x` along a differential
/// equation; primed names never nest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName {
    pub base: String,
    pub primed: bool,
}

impl VarName {
    pub fn new(base: impl Into<String>) -> Self {
        VarName { base: base.into(), primed: false }
    }

    pub fn primed(base: impl Into<String>) -> Self {
        VarName { base: base.into(), primed: true }
    }

    /// The primed twin of this (unprimed) variable.
    pub fn to_primed(&self) -> VarName {
        VarName { base: self.base.clone(), primed: true }
    }

    /// The unprimed twin of this variable.
    pub fn to_unprimed(&self) -> VarName {
        VarName { base: self.base.clone(), primed: false }
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.base, if self.primed { "'" } else { "" })
    }
}

/// Polynomial terms over rational constants.
///
/// There is no division node: rational constants absorb literal quotients at
/// parse time, so every term is a polynomial in its variables. `Lit` values
/// are kept nonnegative; negative constants are represented as `Neg(Lit)` so
/// that printing and parsing agree structurally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarName),
    Lit(BigRational),
    Neg(Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Minus(Box<Term>, Box<Term>),
    Times(Box<Term>, Box<Term>),
    /// Exponent is a literal nonnegative integer.
    Pow(Box<Term>, u32),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(VarName::new(name))
    }

    /// Integer literal.
    pub fn int(n: i64) -> Term {
        Term::from_rational(BigRational::from_integer(n.into()))
    }

    /// Builds a literal, normalizing negative values to `Neg(Lit(|q|))`.
    pub fn from_rational(q: BigRational) -> Term {
        if q.is_negative() {
            Term::Neg(Box::new(Term::Lit(-q)))
        } else {
            Term::Lit(q)
        }
    }

    pub fn neg(t: Term) -> Term {
        Term::Neg(Box::new(t))
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn minus(a: Term, b: Term) -> Term {
        Term::Minus(Box::new(a), Box::new(b))
    }

    pub fn times(a: Term, b: Term) -> Term {
        Term::Times(Box::new(a), Box::new(b))
    }

    pub fn pow(base: Term, exp: u32) -> Term {
        Term::Pow(Box::new(base), exp)
    }

    /// The literal value if this term is a (possibly negated) constant.
    pub fn as_literal(&self) -> Option<BigRational> {
        match self {
            Term::Lit(q) => Some(q.clone()),
            Term::Neg(t) => t.as_literal().map(|q| -q),
            _ => None,
        }
    }

    /// Folds constant subexpressions and arithmetic identities.
    ///
    /// Used after binding model constants and after differential
    /// substitution, never during parsing (parsing must preserve structure).
    pub fn fold(&self) -> Term {
        match self {
            Term::Var(_) | Term::Lit(_) => self.clone(),
            Term::Neg(t) => {
                let t = t.fold();
                match t {
                    Term::Lit(q) if q.is_zero() => Term::Lit(q),
                    Term::Neg(inner) => *inner,
                    t => match t.as_literal() {
                        Some(q) => Term::from_rational(-q),
                        None => Term::neg(t),
                    },
                }
            }
            Term::Plus(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_literal(), b.as_literal()) {
                    (Some(x), Some(y)) => Term::from_rational(x + y),
                    (Some(x), None) if x.is_zero() => b,
                    (None, Some(y)) if y.is_zero() => a,
                    _ => Term::plus(a, b),
                }
            }
            Term::Minus(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_literal(), b.as_literal()) {
                    (Some(x), Some(y)) => Term::from_rational(x - y),
                    (None, Some(y)) if y.is_zero() => a,
                    (Some(x), None) if x.is_zero() => Term::neg(b).fold(),
                    _ => Term::minus(a, b),
                }
            }
            Term::Times(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_literal(), b.as_literal()) {
                    (Some(x), Some(y)) => Term::from_rational(x * y),
                    (Some(x), None) => fold_scale(x, b),
                    (None, Some(y)) => fold_scale(y, a),
                    _ => Term::times(a, b),
                }
            }
            Term::Pow(base, e) => {
                let base = base.fold();
                match (base.as_literal(), *e) {
                    (_, 0) => Term::int(1),
                    (_, 1) => base,
                    (Some(q), e) => {
                        Term::from_rational(pow_rational(&q, e))
                    }
                    (None, e) => Term::pow(base, e),
                }
            }
        }
    }
}

fn fold_scale(k: BigRational, t: Term) -> Term {
    if k.is_zero() {
        Term::int(0)
    } else if k.is_one() {
        t
    } else if (-&k).is_one() {
        Term::neg(t).fold()
    } else {
        Term::times(Term::from_rational(k), t)
    }
}

pub(crate) fn pow_rational(q: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= q;
    }
    acc
}

/// Formulas of differential dynamic logic.
///
/// The derived comparisons (`>`, `<=`, `<`, `!=`) are first-class nodes; only
/// the arithmetic backend normalizes them away.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Geq(Term, Term),
    Gt(Term, Term),
    Leq(Term, Term),
    Lt(Term, Term),
    Neq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    Forall(VarName, Box<Formula>),
    Exists(VarName, Box<Formula>),
    Box_(Box<HybridProgram>, Box<Formula>),
    Diamond(Box<HybridProgram>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imply(a: Formula, b: Formula) -> Formula {
        Formula::Imply(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Formula, b: Formula) -> Formula {
        Formula::Equiv(Box::new(a), Box::new(b))
    }

    pub fn forall(x: VarName, f: Formula) -> Formula {
        Formula::Forall(x, Box::new(f))
    }

    pub fn exists(x: VarName, f: Formula) -> Formula {
        Formula::Exists(x, Box::new(f))
    }

    pub fn boxed(p: HybridProgram, f: Formula) -> Formula {
        Formula::Box_(Box::new(p), Box::new(f))
    }

    pub fn diamond(p: HybridProgram, f: Formula) -> Formula {
        Formula::Diamond(Box::new(p), Box::new(f))
    }

    /// Conjunction of a list; empty list is `true`.
    pub fn conj(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().unwrap(),
            _ => {
                let mut it = fs.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Formula::and)
            }
        }
    }

    /// The conjuncts of a right- or left-nested conjunction.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            f => vec![f],
        }
    }

    /// True if the formula contains no quantifier or modality.
    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True
            | Formula::False
            | Formula::Eq(..)
            | Formula::Geq(..)
            | Formula::Gt(..)
            | Formula::Leq(..)
            | Formula::Lt(..)
            | Formula::Neq(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Forall(..) | Formula::Exists(..) | Formula::Box_(..) | Formula::Diamond(..) => false,
        }
    }

    /// Folds constants in every term and evaluates ground comparisons.
    pub fn fold(&self) -> Formula {
        fn cmp_fold(
            a: &Term,
            b: &Term,
            mk: impl Fn(Term, Term) -> Formula,
            decide: impl Fn(&BigRational, &BigRational) -> bool,
        ) -> Formula {
            let (a, b) = (a.fold(), b.fold());
            match (a.as_literal(), b.as_literal()) {
                (Some(x), Some(y)) => {
                    if decide(&x, &y) {
                        Formula::True
                    } else {
                        Formula::False
                    }
                }
                _ => mk(a, b),
            }
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Eq(a, b) => cmp_fold(a, b, Formula::Eq, |x, y| x == y),
            Formula::Geq(a, b) => cmp_fold(a, b, Formula::Geq, |x, y| x >= y),
            Formula::Gt(a, b) => cmp_fold(a, b, Formula::Gt, |x, y| x > y),
            Formula::Leq(a, b) => cmp_fold(a, b, Formula::Leq, |x, y| x <= y),
            Formula::Lt(a, b) => cmp_fold(a, b, Formula::Lt, |x, y| x < y),
            Formula::Neq(a, b) => cmp_fold(a, b, Formula::Neq, |x, y| x != y),
            Formula::Not(f) => match f.fold() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                f => Formula::not(f),
            },
            Formula::And(a, b) => match (a.fold(), b.fold()) {
                (Formula::False, _) | (_, Formula::False) => Formula::False,
                (Formula::True, f) | (f, Formula::True) => f,
                (a, b) => Formula::and(a, b),
            },
            Formula::Or(a, b) => match (a.fold(), b.fold()) {
                (Formula::True, _) | (_, Formula::True) => Formula::True,
                (Formula::False, f) | (f, Formula::False) => f,
                (a, b) => Formula::or(a, b),
            },
            Formula::Imply(a, b) => match (a.fold(), b.fold()) {
                (Formula::False, _) => Formula::True,
                (Formula::True, f) => f,
                (_, Formula::True) => Formula::True,
                (a, b) => Formula::imply(a, b),
            },
            Formula::Equiv(a, b) => Formula::equiv(a.fold(), b.fold()),
            Formula::Forall(x, f) => Formula::forall(x.clone(), f.fold()),
            Formula::Exists(x, f) => Formula::exists(x.clone(), f.fold()),
            Formula::Box_(p, f) => Formula::boxed(p.fold(), f.fold()),
            Formula::Diamond(p, f) => Formula::diamond(p.fold(), f.fold()),
        }
    }
}

/// Hybrid programs: discrete assignments and tests, differential equations
/// with an evolution domain, and the regular combinators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HybridProgram {
    Assign(VarName, Term),
    Test(Formula),
    /// Simultaneous ODE system `{x'=e, ... & domain}`.
    Ode(Vec<(VarName, Term)>, Formula),
    Choice(Box<HybridProgram>, Box<HybridProgram>),
    Seq(Box<HybridProgram>, Box<HybridProgram>),
    Loop(Box<HybridProgram>),
}

impl HybridProgram {
    pub fn assign(x: VarName, e: Term) -> HybridProgram {
        HybridProgram::Assign(x, e)
    }

    pub fn test(f: Formula) -> HybridProgram {
        HybridProgram::Test(f)
    }

    pub fn choice(a: HybridProgram, b: HybridProgram) -> HybridProgram {
        HybridProgram::Choice(Box::new(a), Box::new(b))
    }

    pub fn seq(a: HybridProgram, b: HybridProgram) -> HybridProgram {
        HybridProgram::Seq(Box::new(a), Box::new(b))
    }

    pub fn repeat(p: HybridProgram) -> HybridProgram {
        HybridProgram::Loop(Box::new(p))
    }

    pub fn fold(&self) -> HybridProgram {
        match self {
            HybridProgram::Assign(x, e) => HybridProgram::Assign(x.clone(), e.fold()),
            HybridProgram::Test(f) => HybridProgram::Test(f.fold()),
            HybridProgram::Ode(eqs, dom) => HybridProgram::Ode(
                eqs.iter().map(|(x, e)| (x.clone(), e.fold())).collect(),
                dom.fold(),
            ),
            HybridProgram::Choice(a, b) => HybridProgram::choice(a.fold(), b.fold()),
            HybridProgram::Seq(a, b) => HybridProgram::seq(a.fold(), b.fold()),
            HybridProgram::Loop(p) => HybridProgram::repeat(p.fold()),
        }
    }
}

/// A sequent `A1, ..., An |- S1, ..., Sm`: the conjunction of the antecedent
/// entails the disjunction of the succedent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequent {
    pub ante: Vec<Formula>,
    pub succ: Vec<Formula>,
}

impl Sequent {
    pub fn new(ante: Vec<Formula>, succ: Vec<Formula>) -> Self {
        Sequent { ante, succ }
    }

    /// `|- f`
    pub fn concluding(f: Formula) -> Self {
        Sequent { ante: vec![], succ: vec![f] }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.ante.iter().chain(&self.succ).all(|f| f.is_quantifier_free())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn literal_constructor_normalizes_sign() {
        assert_eq!(Term::int(-3), Term::neg(Term::int(3)));
        assert_eq!(Term::int(3).as_literal(), Some(rat(3, 1)));
        assert_eq!(Term::int(-3).as_literal(), Some(rat(-3, 1)));
    }

    #[test]
    fn fold_collapses_constant_products() {
        // 2*2*x -> 4*x, the shape the bound-constant pipeline depends on
        let t = Term::times(Term::times(Term::int(2), Term::int(2)), Term::var("x"));
        assert_eq!(t.fold(), Term::times(Term::int(4), Term::var("x")));
    }

    #[test]
    fn fold_keeps_unit_and_zero_identities() {
        let x = Term::var("x");
        assert_eq!(Term::times(Term::int(1), x.clone()).fold(), x.clone());
        assert_eq!(Term::times(Term::int(0), x.clone()).fold(), Term::int(0));
        assert_eq!(Term::plus(x.clone(), Term::int(0)).fold(), x.clone());
        assert_eq!(Term::minus(Term::int(0), x.clone()).fold(), Term::neg(x.clone()));
        assert_eq!(Term::pow(x.clone(), 1).fold(), x.clone());
        assert_eq!(Term::pow(x, 0).fold(), Term::int(1));
    }

    #[test]
    fn formula_fold_evaluates_ground_atoms() {
        let f = Formula::Gt(Term::int(2), Term::int(0));
        assert_eq!(f.fold(), Formula::True);
        let g = Formula::and(Formula::True, Formula::Eq(Term::var("x"), Term::int(1)));
        assert_eq!(g.fold(), Formula::Eq(Term::var("x"), Term::int(1)));
    }

    #[test]
    fn conj_of_empty_is_true() {
        assert_eq!(Formula::conj(vec![]), Formula::True);
    }
}
