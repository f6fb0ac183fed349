//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms of the logic are polynomial by construction (no division nodes, no
//! symbolic exponents), so every term maps onto a `Poly` and back. The map
//! is the semantic backbone of the toolchain: two terms denote the same
//! function iff their difference maps to the zero polynomial, and the
//! canonical `to_term` form gives a deterministic normal form for printing
//! and comparing derived facts.
//!
//! Coefficient arithmetic is exact (`BigRational`); monomials and the
//! polynomial itself are ordered maps so every operation is deterministic.

use crate::syntax::ast::{pow_rational, Term, VarName};
use crate::syntax::vars::VarSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// A power product, e.g. `x^2*y`; exponents are always >= 1.
pub type Monomial = BTreeMap<VarName, u32>;

/// A polynomial as a map from monomial to nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(q: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(Monomial::new(), q);
        }
        Poly { terms }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn var(x: VarName) -> Poly {
        let mut m = Monomial::new();
        m.insert(x, 1);
        let mut terms = BTreeMap::new();
        terms.insert(m, BigRational::one());
        Poly { terms }
    }

    /// Builds from a monomial/coefficient map, dropping zero coefficients.
    pub fn from_map(map: BTreeMap<Monomial, BigRational>) -> Poly {
        Poly { terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value of a constant polynomial (zero counts as constant 0).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// All variables that occur with nonzero exponent.
    pub fn vars(&self) -> VarSet {
        self.terms.keys().flat_map(|m| m.keys().cloned()).collect()
    }

    pub fn degree_in(&self, x: &VarName) -> u32 {
        self.terms.keys().map(|m| m.get(x).copied().unwrap_or(0)).max().unwrap_or(0)
    }

    /// Coefficient polynomials by power of `x`; index `k` holds the
    /// coefficient of `x^k`. Always at least one entry.
    pub fn coeffs_in(&self, x: &VarName) -> Vec<Poly> {
        let deg = self.degree_in(x) as usize;
        let mut out = vec![BTreeMap::new(); deg + 1];
        for (m, c) in &self.terms {
            let mut m = m.clone();
            let k = m.remove(x).unwrap_or(0) as usize;
            out[k].insert(m, c.clone());
        }
        out.into_iter().map(Poly::from_map).collect()
    }

    /// Substitutes a polynomial for a variable (Horner evaluation).
    pub fn subst_var(&self, x: &VarName, replacement: &Poly) -> Poly {
        let coeffs = self.coeffs_in(x);
        let mut acc = Poly::zero();
        for c in coeffs.into_iter().rev() {
            acc = &(&acc * replacement) + &c;
        }
        acc
    }

    /// Views a polynomial of total degree <= 1 as coefficients plus constant.
    pub fn as_linear(&self) -> Option<(BTreeMap<VarName, BigRational>, BigRational)> {
        let mut coeffs = BTreeMap::new();
        let mut cst = BigRational::zero();
        for (m, c) in &self.terms {
            match m.len() {
                0 => cst = c.clone(),
                1 => {
                    let (x, e) = m.iter().next().unwrap();
                    if *e != 1 {
                        return None;
                    }
                    coeffs.insert(x.clone(), c.clone());
                }
                _ => return None,
            }
        }
        Some((coeffs, cst))
    }

    /// The positive gcd of all coefficients; zero for the zero polynomial.
    pub fn content(&self) -> BigRational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            BigRational::zero()
        } else {
            BigRational::new(num, den)
        }
    }

    /// The largest monomial dividing every monomial of the polynomial.
    pub fn common_monomial(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::new() };
        let mut common = first.clone();
        for m in it {
            common = common
                .iter()
                .filter_map(|(x, e)| {
                    let other = m.get(x).copied().unwrap_or(0);
                    let e = (*e).min(other);
                    (e > 0).then(|| (x.clone(), e))
                })
                .collect();
            if common.is_empty() {
                break;
            }
        }
        common
    }

    /// Divides out a monomial that divides every term.
    pub fn div_monomial(&self, divisor: &Monomial) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut m = m.clone();
                for (x, e) in divisor {
                    let cur = m.remove(x).unwrap_or(0);
                    debug_assert!(cur >= *e, "monomial does not divide polynomial");
                    if cur > *e {
                        m.insert(x.clone(), cur - e);
                    }
                }
                (m, c.clone())
            })
            .collect();
        Poly { terms }
    }

    pub fn from_term(t: &Term) -> Poly {
        match t {
            Term::Var(x) => Poly::var(x.clone()),
            Term::Lit(q) => Poly::constant(q.clone()),
            Term::Neg(a) => -&Poly::from_term(a),
            Term::Plus(a, b) => &Poly::from_term(a) + &Poly::from_term(b),
            Term::Minus(a, b) => &Poly::from_term(a) - &Poly::from_term(b),
            Term::Times(a, b) => &Poly::from_term(a) * &Poly::from_term(b),
            Term::Pow(a, e) => Poly::from_term(a).pow(*e),
        }
    }

    /// The canonical term: monomials in map order, alphabetical factors,
    /// coefficients folded into the leading factor, signs as `+`/`-` chains.
    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (m, c) in &self.terms {
            let mut factors = Vec::new();
            let abs = c.abs();
            if !abs.is_one() || m.is_empty() {
                factors.push(Term::Lit(abs));
            }
            for (x, e) in m {
                factors.push(match e {
                    1 => Term::Var(x.clone()),
                    e => Term::pow(Term::Var(x.clone()), *e),
                });
            }
            let mut it = factors.into_iter();
            let first = it.next().unwrap();
            let product = it.fold(first, Term::times);
            acc = Some(match acc {
                None if c.is_negative() => Term::neg(product),
                None => product,
                Some(prev) if c.is_negative() => Term::minus(prev, product),
                Some(prev) => Term::plus(prev, product),
            });
        }
        acc.unwrap_or_else(|| Term::int(0))
    }

    /// Evaluates at a full rational assignment; `None` on a missing variable.
    pub fn eval(&self, env: &BTreeMap<VarName, BigRational>) -> Option<BigRational> {
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for (x, e) in m {
                prod *= pow_rational(env.get(x)?, *e);
            }
            total += prod;
        }
        Some(total)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Poly { terms }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = ma.clone();
                for (x, e) in mb {
                    *m.entry(x.clone()).or_insert(0) += e;
                }
                let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
                *entry += ca * cb;
                if entry.is_zero() {
                    terms.remove(&m);
                }
            }
        }
        Poly { terms }
    }
}

/// Canonical polynomial normal form of a term.
pub fn poly_normalize(t: &Term) -> Term {
    Poly::from_term(t).to_term()
}

/// True iff the two terms denote the same polynomial function.
pub fn poly_zero(a: &Term, b: &Term) -> bool {
    (&Poly::from_term(a) - &Poly::from_term(b)).is_zero()
}
