//! The line-oriented JSON protocol between sandbox and controller.
//!
//! One request per control cycle:
//!
//! ```text
//! {"cycle":3,"state":{"v":-2,"x":0.75}}
//! ```
//!
//! and one reply:
//!
//! ```text
//! {"set":{"v":2}}
//! ```
//!
//! Numbers travel as plain decimals with at most twelve fractional digits so
//! both sides agree on exact values — no floats are involved at any point.
//! Replies are parsed by a small strict scanner instead of a general JSON
//! library so that numbers can be taken verbatim as exact rationals.

use crate::sim::state::State;
use crate::syntax::ast::VarName;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use std::collections::BTreeMap;

/// Max fractional digits a wire number may carry.
const WIRE_SCALE: usize = 12;

/// Renders an exact rational as a plain decimal, if it has one within the
/// wire precision.
pub fn to_decimal(q: &BigRational) -> Option<String> {
    let mut scale = BigInt::one();
    for _ in 0..WIRE_SCALE {
        scale *= 10;
    }
    let scaled = q * BigRational::from_integer(scale);
    if !scaled.is_integer() {
        return None;
    }
    let scaled = scaled.to_integer();
    let (sign, magnitude) = if scaled.is_negative() { ("-", -scaled) } else { ("", scaled) };
    let digits = magnitude.to_string();
    let (int_part, frac_part) = if digits.len() > WIRE_SCALE {
        let split = digits.len() - WIRE_SCALE;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), format!("{digits:0>WIRE_SCALE$}"))
    };
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.is_empty() {
        Some(format!("{sign}{int_part}"))
    } else {
        Some(format!("{sign}{int_part}.{frac_part}"))
    }
}

/// Parses a wire decimal back to an exact rational.
pub fn from_decimal(text: &str) -> Result<BigRational, String> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("`{text}` is not a decimal number"));
    }
    if body.contains('.') && frac_part.is_empty() {
        return Err(format!("`{text}` has a trailing decimal point"));
    }
    if frac_part.len() > WIRE_SCALE || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("`{text}` has more than {WIRE_SCALE} fractional digits"));
    }
    let mut numer: BigInt = int_part.parse().expect("digits");
    let mut denom = BigInt::one();
    for d in frac_part.bytes() {
        numer = numer * 10 + (d - b'0');
        denom *= 10;
    }
    Ok(BigRational::new(numer * sign, denom))
}

/// Builds the per-cycle request line, or names a state variable with no
/// finite decimal form.
pub fn state_request(cycle: u32, state: &State) -> Result<String, VarName> {
    let mut fields = Vec::new();
    for (x, value) in state.iter() {
        if x.primed {
            continue;
        }
        let exact = value.as_exact().ok_or_else(|| x.clone())?;
        let rendered = to_decimal(&exact).ok_or_else(|| x.clone())?;
        fields.push(format!("\"{}\":{}", x, rendered));
    }
    Ok(format!("{{\"cycle\":{},\"state\":{{{}}}}}", cycle, fields.join(",")))
}

/// Parses a controller reply `{"set":{...}}`, allowing writes only to the
/// declared variables.
pub fn parse_proposal(
    line: &str,
    allowed: &[VarName],
) -> Result<BTreeMap<VarName, BigRational>, String> {
    let mut scan = Scanner::new(line);
    scan.expect('{')?;
    scan.expect_string("set")?;
    scan.expect(':')?;
    scan.expect('{')?;
    let mut set = BTreeMap::new();
    if !scan.peek_is('}') {
        loop {
            let name = scan.string()?;
            scan.expect(':')?;
            let value = scan.number()?;
            let var = VarName::new(&name);
            if !allowed.contains(&var) {
                return Err(format!("controller wrote undeclared variable `{name}`"));
            }
            if set.insert(var, value).is_some() {
                return Err(format!("duplicate variable `{name}` in proposal"));
            }
            if scan.peek_is(',') {
                scan.expect(',')?;
            } else {
                break;
            }
        }
    }
    scan.expect('}')?;
    scan.expect('}')?;
    scan.end()?;
    Ok(set)
}

/// Parses a sandbox request on the controller side: cycle number plus the
/// state bindings in order of appearance.
pub fn parse_request(line: &str) -> Option<(u64, Vec<(String, BigRational)>)> {
    let mut scan = Scanner::new(line);
    scan.expect('{').ok()?;
    scan.expect_string("cycle").ok()?;
    scan.expect(':').ok()?;
    let cycle = scan.integer().ok()?;
    scan.expect(',').ok()?;
    scan.expect_string("state").ok()?;
    scan.expect(':').ok()?;
    scan.expect('{').ok()?;
    let mut bindings = Vec::new();
    if !scan.peek_is('}') {
        loop {
            let name = scan.string().ok()?;
            scan.expect(':').ok()?;
            let value = scan.number().ok()?;
            bindings.push((name, value));
            if scan.peek_is(',') {
                scan.expect(',').ok()?;
            } else {
                break;
            }
        }
    }
    scan.expect('}').ok()?;
    scan.expect('}').ok()?;
    scan.end().ok()?;
    Some((cycle, bindings))
}

/// Strict cursor over a protocol line; whitespace between tokens is allowed.
struct Scanner<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(c)
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(format!("expected `{c}` at byte {} of `{}`", self.pos, self.text))
        }
    }

    fn string(&mut self) -> Result<String, String> {
        self.expect('"')?;
        let rest = &self.text[self.pos..];
        let end = rest
            .find('"')
            .ok_or_else(|| format!("unterminated string in `{}`", self.text))?;
        let body = &rest[..end];
        if body.contains('\\') {
            return Err(format!("escapes are not supported in `{body}`"));
        }
        self.pos += end + 1;
        Ok(body.to_string())
    }

    fn expect_string(&mut self, want: &str) -> Result<(), String> {
        let got = self.string()?;
        if got == want {
            Ok(())
        } else {
            Err(format!("expected \"{want}\", got \"{got}\""))
        }
    }

    fn number(&mut self) -> Result<BigRational, String> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let end = rest
            .char_indices()
            .find(|(_, c)| !matches!(c, '0'..='9' | '-' | '.'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(format!("expected a number at byte {} of `{}`", self.pos, self.text));
        }
        let token = &rest[..end];
        self.pos += end;
        from_decimal(token)
    }

    fn integer(&mut self) -> Result<u64, String> {
        let q = self.number()?;
        if !q.is_integer() || q.is_negative() {
            return Err(format!("`{q}` is not a cycle count"));
        }
        let n = q.to_integer();
        u64::try_from(n).map_err(|_| "cycle count out of range".to_string())
    }

    fn end(&mut self) -> Result<(), String> {
        self.skip_ws();
        if self.pos == self.text.len() {
            Ok(())
        } else {
            Err(format!("trailing input `{}`", &self.text[self.pos..]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn q(s: &str) -> BigRational {
        BigRational::from_str(s).unwrap()
    }

    #[test]
    fn decimals_roundtrip_exactly() {
        for s in ["0", "1", "-1", "3/4", "-3/4", "1/64", "123456789/1000", "-2", "7/8"] {
            let v = q(s);
            let text = to_decimal(&v).unwrap();
            assert_eq!(from_decimal(&text).unwrap(), v, "via {text}");
        }
        assert_eq!(to_decimal(&q("3/4")).unwrap(), "0.75");
        assert_eq!(to_decimal(&q("-2")).unwrap(), "-2");
        assert_eq!(to_decimal(&q("1/1000000000000")).unwrap(), "0.000000000001");
    }

    #[test]
    fn unrepresentable_rationals_are_refused() {
        assert_eq!(to_decimal(&q("1/3")), None);
        assert_eq!(to_decimal(&q("1/10000000000000")), None);
    }

    #[test]
    fn strict_decimal_parsing_rejects_junk() {
        assert!(from_decimal(".5").is_err());
        assert!(from_decimal("2.").is_err());
        assert!(from_decimal("1e3").is_err());
        assert!(from_decimal("--1").is_err());
        assert!(from_decimal("0.1234567890123").is_err());
        assert!(from_decimal("").is_err());
        assert_eq!(from_decimal("-0.5").unwrap(), q("-1/2"));
    }

    #[test]
    fn requests_render_sorted_and_skip_primes() {
        use crate::sim::state::Value;
        let mut s = State::exact([
            (VarName::new("x"), q("3/4")),
            (VarName::new("v"), q("-2")),
        ]);
        s.set(VarName::primed("x"), Value::Exact(q("1")));
        let line = state_request(3, &s).unwrap();
        assert_eq!(line, "{\"cycle\":3,\"state\":{\"v\":-2,\"x\":0.75}}");
    }

    #[test]
    fn proposals_parse_strictly() {
        let v = VarName::new("v");
        let allowed = vec![v.clone()];
        let got = parse_proposal("{\"set\":{\"v\":2}}", &allowed).unwrap();
        assert_eq!(got.get(&v), Some(&q("2")));
        let got = parse_proposal("{ \"set\" : { } }", &allowed).unwrap();
        assert!(got.is_empty());

        for bad in [
            "{\"set\":{\"x\":1}}",             // undeclared variable
            "{\"set\":{\"v\":1,\"v\":2}}",     // duplicate
            "{\"set\":{\"v\":0.3333333333333}}", // too many digits
            "{\"set\":{\"v\":2}} extra",
            "{\"set\":[]}",
            "{\"other\":{}}",
            "not json",
        ] {
            assert!(parse_proposal(bad, &allowed).is_err(), "accepted {bad}");
        }
    }

    #[test]
    fn the_controller_side_reads_requests_back() {
        let (cycle, bindings) =
            parse_request("{\"cycle\":7,\"state\":{\"v\":-2,\"x\":0.75}}").unwrap();
        assert_eq!(cycle, 7);
        assert_eq!(bindings, vec![("v".to_string(), q("-2")), ("x".to_string(), q("3/4"))]);
        assert!(parse_request("{\"cycle\":7}").is_none());
    }
}
