//! A tiny stack machine for monitor formulas, so a monitor can be shipped
//! to and audited on hardware that has no formula data type. Instructions
//! render one per line and parse back; `run` interprets a program against
//! an exact state and agrees with direct formula evaluation.

use crate::sim::{State, Value};
use crate::syntax::ast::{Formula, Term, VarName};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::str::FromStr;
use thiserror::Error;

/// One instruction. Numeric instructions work on exact rationals; `Ge` and
/// `Eq` turn the top two numbers into a boolean; `And`/`Or`/`Not` combine
/// booleans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Load(VarName),
    Const(BigRational),
    Add,
    Sub,
    Mul,
    Pow(u32),
    Ge,
    Eq,
    And,
    Or,
    Not,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("cannot compile `{0}`: monitors must be quantifier-free")]
    NotQuantifierFree(Formula),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: unknown instruction `{text}`")]
    UnknownInstruction { line: usize, text: String },
    #[error("line {line}: `{opcode}` needs an argument")]
    MissingArgument { line: usize, opcode: String },
    #[error("line {line}: cannot read `{text}` as a number")]
    BadNumber { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("variable `{0}` is not in the state")]
    MissingVariable(VarName),
    #[error("variable `{0}` has no exact value")]
    InexactVariable(VarName),
    #[error("instruction {0} expected a {1} on the stack")]
    TypeMismatch(usize, &'static str),
    #[error("instruction {0} found too few operands on the stack")]
    StackUnderflow(usize),
    #[error("the program left {0} stack entries instead of one boolean")]
    BadResult(usize),
}

/// Compiles a quantifier-free formula to stack code. Comparisons reduce to
/// `Ge` and `Eq` plus `Not`; implication and equivalence expand into
/// and/or/not form.
pub fn compile(f: &Formula) -> Result<Vec<Instr>, CompileError> {
    let mut out = Vec::new();
    emit_formula(f, &mut out)?;
    Ok(out)
}

fn emit_formula(f: &Formula, out: &mut Vec<Instr>) -> Result<(), CompileError> {
    match f {
        Formula::True => {
            out.push(Instr::Const(BigRational::zero()));
            out.push(Instr::Const(BigRational::zero()));
            out.push(Instr::Ge);
        }
        Formula::False => {
            out.push(Instr::Const(BigRational::zero()));
            out.push(Instr::Const(BigRational::one()));
            out.push(Instr::Ge);
        }
        Formula::Geq(l, r) => {
            emit_term(l, out);
            emit_term(r, out);
            out.push(Instr::Ge);
        }
        Formula::Leq(l, r) => {
            emit_term(r, out);
            emit_term(l, out);
            out.push(Instr::Ge);
        }
        Formula::Gt(l, r) => {
            emit_term(r, out);
            emit_term(l, out);
            out.push(Instr::Ge);
            out.push(Instr::Not);
        }
        Formula::Lt(l, r) => {
            emit_term(l, out);
            emit_term(r, out);
            out.push(Instr::Ge);
            out.push(Instr::Not);
        }
        Formula::Eq(l, r) => {
            emit_term(l, out);
            emit_term(r, out);
            out.push(Instr::Eq);
        }
        Formula::Neq(l, r) => {
            emit_term(l, out);
            emit_term(r, out);
            out.push(Instr::Eq);
            out.push(Instr::Not);
        }
        Formula::Not(g) => {
            emit_formula(g, out)?;
            out.push(Instr::Not);
        }
        Formula::And(a, b) => {
            emit_formula(a, out)?;
            emit_formula(b, out)?;
            out.push(Instr::And);
        }
        Formula::Or(a, b) => {
            emit_formula(a, out)?;
            emit_formula(b, out)?;
            out.push(Instr::Or);
        }
        Formula::Imply(a, b) => {
            emit_formula(a, out)?;
            out.push(Instr::Not);
            emit_formula(b, out)?;
            out.push(Instr::Or);
        }
        Formula::Equiv(a, b) => {
            emit_formula(a, out)?;
            emit_formula(b, out)?;
            out.push(Instr::And);
            emit_formula(a, out)?;
            out.push(Instr::Not);
            emit_formula(b, out)?;
            out.push(Instr::Not);
            out.push(Instr::And);
            out.push(Instr::Or);
        }
        Formula::Forall(..) | Formula::Exists(..) | Formula::Box_(..) | Formula::Diamond(..) => {
            return Err(CompileError::NotQuantifierFree(f.clone()));
        }
    }
    Ok(())
}

fn emit_term(t: &Term, out: &mut Vec<Instr>) {
    match t {
        Term::Var(x) => out.push(Instr::Load(x.clone())),
        Term::Lit(q) => out.push(Instr::Const(q.clone())),
        Term::Neg(a) => {
            out.push(Instr::Const(BigRational::zero()));
            emit_term(a, out);
            out.push(Instr::Sub);
        }
        Term::Plus(a, b) => {
            emit_term(a, out);
            emit_term(b, out);
            out.push(Instr::Add);
        }
        Term::Minus(a, b) => {
            emit_term(a, out);
            emit_term(b, out);
            out.push(Instr::Sub);
        }
        Term::Times(a, b) => {
            emit_term(a, out);
            emit_term(b, out);
            out.push(Instr::Mul);
        }
        Term::Pow(a, k) => {
            emit_term(a, out);
            out.push(Instr::Pow(*k));
        }
    }
}

/// One line per instruction, e.g. `LOAD x`, `CONST 3/2`, `POW 2`, `GE`.
pub fn render(program: &[Instr]) -> String {
    let mut out = String::new();
    for insn in program {
        match insn {
            Instr::Load(x) => out.push_str(&format!("LOAD {x}\n")),
            Instr::Const(q) => out.push_str(&format!("CONST {q}\n")),
            Instr::Add => out.push_str("ADD\n"),
            Instr::Sub => out.push_str("SUB\n"),
            Instr::Mul => out.push_str("MUL\n"),
            Instr::Pow(k) => out.push_str(&format!("POW {k}\n")),
            Instr::Ge => out.push_str("GE\n"),
            Instr::Eq => out.push_str("EQ\n"),
            Instr::And => out.push_str("AND\n"),
            Instr::Or => out.push_str("OR\n"),
            Instr::Not => out.push_str("NOT\n"),
        }
    }
    out
}

/// Parses rendered stack code. Blank lines and `#` comments are skipped.
pub fn parse_instructions(src: &str) -> Result<Vec<Instr>, ParseError> {
    let mut out = Vec::new();
    for (ix, raw) in src.lines().enumerate() {
        let line = ix + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut words = text.split_whitespace();
        let opcode = words.next().expect("non-empty line");
        let arg = words.next();
        let need_arg = |opcode: &str| -> Result<&str, ParseError> {
            arg.ok_or(ParseError::MissingArgument { line, opcode: opcode.to_string() })
        };
        let insn = match opcode {
            "LOAD" => {
                let name = need_arg("LOAD")?;
                match name.strip_suffix('\'') {
                    Some(base) => Instr::Load(VarName { base: base.to_string(), primed: true }),
                    None => Instr::Load(VarName::new(name)),
                }
            }
            "CONST" => {
                let text = need_arg("CONST")?;
                let q = BigRational::from_str(text)
                    .map_err(|_| ParseError::BadNumber { line, text: text.to_string() })?;
                Instr::Const(q)
            }
            "POW" => {
                let text = need_arg("POW")?;
                let k = text
                    .parse::<u32>()
                    .map_err(|_| ParseError::BadNumber { line, text: text.to_string() })?;
                Instr::Pow(k)
            }
            "ADD" => Instr::Add,
            "SUB" => Instr::Sub,
            "MUL" => Instr::Mul,
            "GE" => Instr::Ge,
            "EQ" => Instr::Eq,
            "AND" => Instr::And,
            "OR" => Instr::Or,
            "NOT" => Instr::Not,
            other => {
                return Err(ParseError::UnknownInstruction { line, text: other.to_string() })
            }
        };
        out.push(insn);
    }
    Ok(out)
}

enum Slot {
    Num(BigRational),
    Bool(bool),
}

/// Runs a program against an exact state; the result is the single boolean
/// left on the stack.
pub fn run(program: &[Instr], state: &State) -> Result<bool, RunError> {
    let mut stack: Vec<Slot> = Vec::new();
    for (ix, insn) in program.iter().enumerate() {
        let pop_num = |stack: &mut Vec<Slot>| -> Result<BigRational, RunError> {
            match stack.pop() {
                Some(Slot::Num(q)) => Ok(q),
                Some(Slot::Bool(_)) => Err(RunError::TypeMismatch(ix, "number")),
                None => Err(RunError::StackUnderflow(ix)),
            }
        };
        let pop_bool = |stack: &mut Vec<Slot>| -> Result<bool, RunError> {
            match stack.pop() {
                Some(Slot::Bool(b)) => Ok(b),
                Some(Slot::Num(_)) => Err(RunError::TypeMismatch(ix, "boolean")),
                None => Err(RunError::StackUnderflow(ix)),
            }
        };
        match insn {
            Instr::Load(x) => {
                let value = state.get(x).ok_or_else(|| RunError::MissingVariable(x.clone()))?;
                match value {
                    Value::Exact(q) => stack.push(Slot::Num(q.clone())),
                    Value::Float(_) => return Err(RunError::InexactVariable(x.clone())),
                }
            }
            Instr::Const(q) => stack.push(Slot::Num(q.clone())),
            Instr::Add => {
                let (r, l) = (pop_num(&mut stack)?, pop_num(&mut stack)?);
                stack.push(Slot::Num(l + r));
            }
            Instr::Sub => {
                let (r, l) = (pop_num(&mut stack)?, pop_num(&mut stack)?);
                stack.push(Slot::Num(l - r));
            }
            Instr::Mul => {
                let (r, l) = (pop_num(&mut stack)?, pop_num(&mut stack)?);
                stack.push(Slot::Num(l * r));
            }
            Instr::Pow(k) => {
                let base = pop_num(&mut stack)?;
                stack.push(Slot::Num(pow_rational(base, *k)));
            }
            Instr::Ge => {
                let (r, l) = (pop_num(&mut stack)?, pop_num(&mut stack)?);
                stack.push(Slot::Bool(l >= r));
            }
            Instr::Eq => {
                let (r, l) = (pop_num(&mut stack)?, pop_num(&mut stack)?);
                stack.push(Slot::Bool(l == r));
            }
            Instr::And => {
                let (r, l) = (pop_bool(&mut stack)?, pop_bool(&mut stack)?);
                stack.push(Slot::Bool(l && r));
            }
            Instr::Or => {
                let (r, l) = (pop_bool(&mut stack)?, pop_bool(&mut stack)?);
                stack.push(Slot::Bool(l || r));
            }
            Instr::Not => {
                let b = pop_bool(&mut stack)?;
                stack.push(Slot::Bool(!b));
            }
        }
    }
    match (stack.pop(), stack.len()) {
        (Some(Slot::Bool(b)), 0) => Ok(b),
        (Some(_), n) => Err(RunError::BadResult(n + 1)),
        (None, _) => Err(RunError::BadResult(0)),
    }
}

fn pow_rational(base: BigRational, k: u32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..k {
        out *= &base;
    }
    out
}
