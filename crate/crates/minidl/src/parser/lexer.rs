//! Tokenizer for the concrete syntax.
//!
//! Tracks line and column for every token and strips `/* ... */` comments
//! anywhere. Identifiers are ASCII `[A-Za-z_][A-Za-z0-9_]*`; `true` and
//! `false` are reserved. A prime is its own token so the parser can demand
//! it exactly where differential syntax allows.

use num_bigint::BigInt;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(BigInt),
    True,
    False,
    Forall,
    Exists,
    AtInvariant,
    AtSolution,
    Assign,   // :=
    Quest,    // ?
    Prime,    // '
    PlusPlus, // ++
    Semi,
    Star,
    Amp,
    Bar,
    Bang,
    Arrow, // ->
    Iff,   // <->
    Eq,
    Neq,
    Geq,
    Leq,
    Gt,
    Lt,
    Plus,
    Minus,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{x}`"),
            Tok::Nat(n) => return write!(f, "literal `{n}`"),
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Forall => "`\\forall`",
            Tok::Exists => "`\\exists`",
            Tok::AtInvariant => "`@invariant`",
            Tok::AtSolution => "`@solution`",
            Tok::Assign => "`:=`",
            Tok::Quest => "`?`",
            Tok::Prime => "`'`",
            Tok::PlusPlus => "`++`",
            Tok::Semi => "`;`",
            Tok::Star => "`*`",
            Tok::Amp => "`&`",
            Tok::Bar => "`|`",
            Tok::Bang => "`!`",
            Tok::Arrow => "`->`",
            Tok::Iff => "`<->`",
            Tok::Eq => "`=`",
            Tok::Neq => "`!=`",
            Tok::Geq => "`>=`",
            Tok::Leq => "`<=`",
            Tok::Gt => "`>`",
            Tok::Lt => "`<`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Slash => "`/`",
            Tok::Caret => "`^`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

/// A token plus the line/column (1-based) where it starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, crate::parser::SyntaxError> {
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    let mut out = Vec::new();

    let err = |line: u32, col: u32, found: String| crate::parser::SyntaxError {
        line,
        col,
        expected: vec!["a token".into()],
        found,
    };

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Spanned { tok: $tok, line: $line, col: $col })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tl, tc) = (line, col);
        let adv = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
            for _ in 0..n {
                if bytes[*i] == b'\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => adv(&mut i, &mut line, &mut col, 1),
            '/' if bytes.get(i + 1) == Some(&b'*') => {
                let (sl, sc) = (line, col);
                adv(&mut i, &mut line, &mut col, 2);
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(crate::parser::SyntaxError {
                            line: sl,
                            col: sc,
                            expected: vec!["`*/`".into()],
                            found: "unterminated comment".into(),
                        });
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        adv(&mut i, &mut line, &mut col, 2);
                        break;
                    }
                    adv(&mut i, &mut line, &mut col, 1);
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    adv(&mut i, &mut line, &mut col, 1);
                }
                let word = &src[start..i];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                push!(tok, tl, tc);
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    adv(&mut i, &mut line, &mut col, 1);
                }
                let n = BigInt::parse_bytes(&bytes[start..i], 10).expect("digits");
                push!(Tok::Nat(n), tl, tc);
            }
            '\\' => {
                adv(&mut i, &mut line, &mut col, 1);
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    adv(&mut i, &mut line, &mut col, 1);
                }
                match &src[start..i] {
                    "forall" => push!(Tok::Forall, tl, tc),
                    "exists" => push!(Tok::Exists, tl, tc),
                    other => return Err(err(tl, tc, format!("`\\{other}`"))),
                }
            }
            '@' => {
                adv(&mut i, &mut line, &mut col, 1);
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    adv(&mut i, &mut line, &mut col, 1);
                }
                match &src[start..i] {
                    "invariant" => push!(Tok::AtInvariant, tl, tc),
                    "solution" => push!(Tok::AtSolution, tl, tc),
                    other => return Err(err(tl, tc, format!("`@{other}`"))),
                }
            }
            _ => {
                let rest = &src[i..];
                let two = |a: Tok, n: usize| (a, n);
                let (tok, n) = if rest.starts_with("<->") {
                    two(Tok::Iff, 3)
                } else if rest.starts_with(":=") {
                    two(Tok::Assign, 2)
                } else if rest.starts_with("++") {
                    two(Tok::PlusPlus, 2)
                } else if rest.starts_with("->") {
                    two(Tok::Arrow, 2)
                } else if rest.starts_with("!=") {
                    two(Tok::Neq, 2)
                } else if rest.starts_with(">=") {
                    two(Tok::Geq, 2)
                } else if rest.starts_with("<=") {
                    two(Tok::Leq, 2)
                } else {
                    let tok = match c {
                        '?' => Tok::Quest,
                        '\'' => Tok::Prime,
                        ';' => Tok::Semi,
                        '*' => Tok::Star,
                        '&' => Tok::Amp,
                        '|' => Tok::Bar,
                        '!' => Tok::Bang,
                        '=' => Tok::Eq,
                        '>' => Tok::Gt,
                        '<' => Tok::Lt,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '/' => Tok::Slash,
                        '^' => Tok::Caret,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        '.' => Tok::Dot,
                        other => return Err(err(tl, tc, format!("`{other}`"))),
                    };
                    (tok, 1)
                };
                adv(&mut i, &mut line, &mut col, n);
                push!(tok, tl, tc);
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}
