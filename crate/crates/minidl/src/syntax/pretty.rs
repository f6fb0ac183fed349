//! Display implementations for the concrete syntax.
//!
//! The printers parenthesize exactly as the grammar requires, so
//! `parse(format!("{x}"))` reconstructs the same tree. Structure is
//! preserved: `a*(b*c)` prints with its parentheses, non-integer literals
//! print as `(n/d)` in operand position, and a negation in non-leading
//! operand position prints parenthesized (`v*(-c)`).

use super::ast::{Formula, HybridProgram, Sequent, Term};
use num_traits::One;
use std::fmt::{self, Write};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, 0, true)?;
        f.write_str(&s)
    }
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Plus(..) | Term::Minus(..) => 1,
        Term::Times(..) => 2,
        Term::Neg(..) => 3,
        Term::Pow(..) => 4,
        Term::Var(_) => 5,
        Term::Lit(q) => {
            if q.denom().is_one() {
                5
            } else {
                0 // rational literals must re-lex inside parentheses
            }
        }
    }
}

fn write_term(out: &mut String, t: &Term, min: u8, leading: bool) -> fmt::Result {
    let prec = term_prec(t);
    let parens = prec < min || (matches!(t, Term::Neg(..)) && !leading);
    if parens {
        out.push('(');
        write_term(out, t, 0, true)?;
        out.push(')');
        return Ok(());
    }
    match t {
        Term::Var(x) => write!(out, "{x}"),
        Term::Lit(q) => {
            if q.denom().is_one() {
                write!(out, "{}", q.numer())
            } else {
                write!(out, "{}/{}", q.numer(), q.denom())
            }
        }
        Term::Neg(a) => {
            out.push('-');
            write_term(out, a, 3, true)
        }
        Term::Plus(a, b) => {
            write_term(out, a, 1, leading)?;
            out.push('+');
            write_term(out, b, 2, false)
        }
        Term::Minus(a, b) => {
            write_term(out, a, 1, leading)?;
            out.push('-');
            write_term(out, b, 2, false)
        }
        Term::Times(a, b) => {
            write_term(out, a, 2, leading)?;
            out.push('*');
            write_term(out, b, 3, false)
        }
        Term::Pow(a, e) => {
            write_term(out, a, 5, false)?;
            write!(out, "^{e}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, 0)?;
        f.write_str(&s)
    }
}

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Equiv(..) => 1,
        Formula::Imply(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(..)
        | Formula::Forall(..)
        | Formula::Exists(..)
        | Formula::Box_(..)
        | Formula::Diamond(..) => 5,
        _ => 6,
    }
}

fn write_formula(out: &mut String, f: &Formula, min: u8) -> fmt::Result {
    let prec = formula_prec(f);
    if prec < min {
        out.push('(');
        write_formula(out, f, 0)?;
        out.push(')');
        return Ok(());
    }
    let mut cmp = |a: &Term, op: &str, b: &Term| -> fmt::Result {
        write_term(out, a, 0, true)?;
        out.push_str(op);
        write_term(out, b, 0, true)
    };
    match f {
        Formula::True => out.write_str("true"),
        Formula::False => out.write_str("false"),
        Formula::Eq(a, b) => cmp(a, "=", b),
        Formula::Geq(a, b) => cmp(a, ">=", b),
        Formula::Gt(a, b) => cmp(a, ">", b),
        Formula::Leq(a, b) => cmp(a, "<=", b),
        Formula::Lt(a, b) => cmp(a, "<", b),
        Formula::Neq(a, b) => cmp(a, "!=", b),
        Formula::Not(g) => {
            out.push('!');
            write_formula(out, g, 5)
        }
        Formula::And(a, b) => {
            write_formula(out, a, 4)?;
            out.push_str(" & ");
            write_formula(out, b, 5)
        }
        Formula::Or(a, b) => {
            write_formula(out, a, 3)?;
            out.push_str(" | ");
            write_formula(out, b, 4)
        }
        Formula::Imply(a, b) => {
            write_formula(out, a, 3)?;
            out.push_str(" -> ");
            write_formula(out, b, 2)
        }
        Formula::Equiv(a, b) => {
            write_formula(out, a, 2)?;
            out.push_str(" <-> ");
            write_formula(out, b, 1)
        }
        Formula::Forall(x, g) => {
            write!(out, "\\forall {x} ")?;
            write_formula(out, g, 5)
        }
        Formula::Exists(x, g) => {
            write!(out, "\\exists {x} ")?;
            write_formula(out, g, 5)
        }
        Formula::Box_(p, g) => {
            out.push('[');
            write_program(out, p, 0)?;
            out.push(']');
            write_formula(out, g, 5)
        }
        Formula::Diamond(p, g) => {
            out.push('<');
            write_program(out, p, 0)?;
            out.push('>');
            write_formula(out, g, 5)
        }
    }
}

impl fmt::Display for HybridProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_program(&mut s, self, 0)?;
        f.write_str(&s)
    }
}

fn write_braced(out: &mut String, p: &HybridProgram) -> fmt::Result {
    // An ODE prints its own braces.
    if matches!(p, HybridProgram::Ode(..)) {
        write_program(out, p, 0)
    } else {
        out.push('{');
        write_program(out, p, 0)?;
        out.push('}');
        Ok(())
    }
}

/// min levels: 0 any, 1 sequence operand, 2 atom position.
fn write_program(out: &mut String, p: &HybridProgram, min: u8) -> fmt::Result {
    let prec = match p {
        HybridProgram::Choice(..) => 0,
        HybridProgram::Seq(..) => 1,
        _ => 2,
    };
    if prec < min {
        return write_braced(out, p);
    }
    match p {
        HybridProgram::Assign(x, e) => {
            write!(out, "{x} := ")?;
            write_term(out, e, 0, true)
        }
        HybridProgram::Test(q) => {
            out.push('?');
            write_formula(out, q, 5)
        }
        HybridProgram::Ode(eqs, dom) => {
            out.push('{');
            for (i, (x, e)) in eqs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{x}' = ")?;
                write_term(out, e, 0, true)?;
            }
            if *dom != Formula::True {
                out.push_str(" & ");
                write_formula(out, dom, 0)?;
            }
            out.push('}');
            Ok(())
        }
        HybridProgram::Choice(a, b) => {
            // Composite operands of ++ are braced, matching the usual
            // rendering {?x=0; v:=-c*v} ++ ?x!=0.
            write_program(out, a, 2)?;
            out.push_str(" ++ ");
            write_program(out, b, 2)
        }
        HybridProgram::Seq(a, b) => {
            write_program(out, a, 2)?;
            out.push_str("; ");
            write_program(out, b, 1)
        }
        HybridProgram::Loop(inner) => {
            write_braced(out, inner)?;
            out.push('*');
            Ok(())
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.ante.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.ante.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str("|-")?;
        for (i, s) in self.succ.iter().enumerate() {
            f.write_str(if i > 0 { ", " } else { " " })?;
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
