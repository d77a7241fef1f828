use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ExactScalar, FieldError};

/// Parses the textual scalar syntax: a signed sum of terms, each of the form
/// `a`, `a/b`, `sqrt(r)`, `a*sqrt(r)` or `a/b*sqrt(r)`.
pub fn parse_scalar(text: &str) -> Result<ExactScalar, FieldError> {
    let err = |reason: &str| FieldError::Parse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    if text.trim().is_empty() {
        return Err(err("empty input"));
    }
    let mut p = Cursor { s: text.as_bytes(), i: 0 };
    let mut raw: Vec<(i128, BigRational)> = Vec::new();
    let mut first = true;
    while !p.done() {
        let negative = match p.peek() {
            Some(b'+') => {
                p.i += 1;
                false
            }
            Some(b'-') => {
                p.i += 1;
                true
            }
            _ if first => false,
            _ => return Err(err("expected '+' or '-' between terms")),
        };
        first = false;
        let (coeff, radicand) = p.term().map_err(|r| err(r))?;
        raw.push((radicand, if negative { -coeff } else { coeff }));
    }
    ExactScalar::normalize(raw)
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn ws(&mut self) {
        while matches!(self.s.get(self.i), Some(b) if b.is_ascii_whitespace()) {
            self.i += 1;
        }
    }

    fn done(&mut self) -> bool {
        self.ws();
        self.i >= self.s.len()
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, lit: &[u8]) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(lit) {
            self.i += lit.len();
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<BigInt, &'static str> {
        self.ws();
        let start = self.i;
        while matches!(self.s.get(self.i), Some(b'0'..=b'9')) {
            self.i += 1;
        }
        if start == self.i {
            return Err("expected a number");
        }
        let digits = std::str::from_utf8(&self.s[start..self.i]).expect("ascii digits");
        Ok(digits.parse().expect("digits parse as integer"))
    }

    fn sqrt(&mut self) -> Result<i128, &'static str> {
        if !(self.eat(b"sqrt") && self.eat(b"(")) {
            return Err("expected sqrt(");
        }
        let r = self.integer()?;
        if !self.eat(b")") {
            return Err("expected ')'");
        }
        i128::try_from(r).map_err(|_| "radicand too large")
    }

    fn term(&mut self) -> Result<(BigRational, i128), &'static str> {
        self.ws();
        if self.s[self.i..].starts_with(b"sqrt") {
            return Ok((BigRational::one(), self.sqrt()?));
        }
        let num = self.integer()?;
        let den = if self.eat(b"/") { self.integer()? } else { BigInt::one() };
        if den.is_zero() {
            return Err("zero denominator");
        }
        let coeff = BigRational::new(num, den);
        let radicand = if self.eat(b"*") { self.sqrt()? } else { 1 };
        Ok((coeff, radicand))
    }
}
