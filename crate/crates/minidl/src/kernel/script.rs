//! Parser for proof scripts.
//!
//! A script is a line-oriented list of rule applications:
//!
//! ```text
//! # induction over the control loop
//! goal 1 : loop with {inv: 2*g*x=2*g*H-v^2 & x>=0}
//! goal 3 : close
//! goal 7 : step at succ 0
//! ```
//!
//! Each line names the open goal it acts on, the rule, an optional explicit
//! target position (`at ante 2` / `at succ 0`), and an optional named
//! argument in braces whose value is parsed as a formula or term by the
//! checker. `#` starts a comment; blank lines are ignored.

use super::rules::Side;
use thiserror::Error;

/// One parsed script line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofStep {
    /// 1-based source line, for error messages.
    pub line: usize,
    /// The goal the rule is applied to.
    pub goal: usize,
    /// Rule name, validated by the checker.
    pub rule: String,
    /// Explicit target position, if any.
    pub at: Option<(Side, usize)>,
    /// Named argument `(key, raw text)`, if any.
    pub arg: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script line {line}: {msg}")]
pub struct ScriptError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError { line, msg: msg.into() })
}

/// Parses a whole proof script.
pub fn parse_script(src: &str) -> Result<Vec<ProofStep>, ScriptError> {
    let mut steps = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        };
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        steps.push(parse_step(line, text)?);
    }
    Ok(steps)
}

fn parse_step(line: usize, text: &str) -> Result<ProofStep, ScriptError> {
    // Split off the argument block first; everything before it is plain
    // whitespace-separated tokens.
    let (head, arg) = match find_word(text, "with") {
        Some(at) => {
            let block = text[at + 4..].trim();
            let inner = block
                .strip_prefix('{')
                .and_then(|b| b.strip_suffix('}'))
                .ok_or_else(|| ScriptError {
                    line,
                    msg: "expected `with { key: value }`".into(),
                })?;
            let (key, value) = inner.split_once(':').ok_or_else(|| ScriptError {
                line,
                msg: "expected `key: value` inside the braces".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return err(line, "expected `key: value` inside the braces");
            }
            (&text[..at], Some((key.to_string(), value.to_string())))
        }
        None => (text, None),
    };

    let (goal_part, rule_part) = match head.split_once(':') {
        Some(parts) => parts,
        None => return err(line, "expected `goal <id> : <rule>`"),
    };
    let goal_tokens: Vec<&str> = goal_part.split_whitespace().collect();
    let goal = match goal_tokens.as_slice() {
        ["goal", id] => match id.parse::<usize>() {
            Ok(n) => n,
            Err(_) => return err(line, format!("`{id}` is not a goal id")),
        },
        _ => return err(line, "expected `goal <id> : <rule>`"),
    };

    let mut tokens = rule_part.split_whitespace();
    let rule = match tokens.next() {
        Some(r) => r.to_string(),
        None => return err(line, "missing rule name"),
    };
    let at = match tokens.next() {
        None => None,
        Some("at") => {
            let side = match tokens.next() {
                Some("ante") => Side::Ante,
                Some("succ") => Side::Succ,
                other => {
                    return err(
                        line,
                        format!("expected `ante` or `succ`, got `{}`", other.unwrap_or("")),
                    )
                }
            };
            let index = match tokens.next().map(str::parse::<usize>) {
                Some(Ok(n)) => n,
                _ => return err(line, "expected a formula index after the side"),
            };
            Some((side, index))
        }
        Some(extra) => return err(line, format!("unexpected token `{extra}`")),
    };
    if let Some(extra) = tokens.next() {
        return err(line, format!("unexpected token `{extra}`"));
    }

    Ok(ProofStep { line, goal, rule, at, arg })
}

/// Byte offset of `word` appearing as a whitespace-delimited token.
fn find_word(text: &str, word: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(at) = text[from..].find(word) {
        let at = from + at;
        let before_ok = at == 0 || text[..at].ends_with(char::is_whitespace);
        let after = at + word.len();
        let after_ok =
            after == text.len() || text[after..].starts_with(char::is_whitespace) || text[after..].starts_with('{');
        if before_ok && after_ok {
            return Some(at);
        }
        from = at + word.len();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_bare_step() {
        let steps = parse_script("goal 3 : close").unwrap();
        assert_eq!(
            steps,
            vec![ProofStep {
                line: 1,
                goal: 3,
                rule: "close".into(),
                at: None,
                arg: None
            }]
        );
    }

    #[test]
    fn parses_target_and_argument() {
        let steps =
            parse_script("goal 12 : loop at succ 0 with {inv: 2*g*x=2*g*H-v^2 & x>=0}").unwrap();
        assert_eq!(steps[0].goal, 12);
        assert_eq!(steps[0].rule, "loop");
        assert_eq!(steps[0].at, Some((Side::Succ, 0)));
        assert_eq!(
            steps[0].arg,
            Some(("inv".to_string(), "2*g*x=2*g*H-v^2 & x>=0".to_string()))
        );
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let src = "\n# a comment\ngoal 1 : step # trailing note\n\ngoal 2 : close\n";
        let steps = parse_script(src).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].line, 3);
        assert_eq!(steps[1].rule, "close");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_script("goal close").is_err());
        assert!(parse_script("goal x : close").is_err());
        assert!(parse_script("goal 1 : loop with {inv}").is_err());
        assert!(parse_script("goal 1 : close at middle 0").is_err());
        assert!(parse_script("goal 1 : close extra").is_err());
    }

    #[test]
    fn argument_values_may_contain_colons_only_after_the_key() {
        let steps = parse_script("goal 1 : M with {mid: x>=0 & g>0 & c=1}").unwrap();
        assert_eq!(steps[0].arg.as_ref().unwrap().1, "x>=0 & g>0 & c=1");
    }
}
