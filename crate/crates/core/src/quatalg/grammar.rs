//! Text encoding of algebras.
//!
//! ```text
//! algebra := "Q" "{" [ qitem ("," qitem)* ] "}"
//!          | "K" "[" disc "]" "{" [ kitem ("," kitem)* ] "}"
//! qitem   := prime | "inf"
//! kitem   := prime ( "+" | "-" | "i" | "r" )
//! ```
//!
//! `+`/`-` name the two conjugate primes above a split prime, `i` the prime
//! above an inert one and `r` the prime above a ramified one. Whitespace is
//! ignored anywhere. Columns in errors are 1-based character positions.

use std::fmt;

use thiserror::Error;

use super::{IdealTag, PrimeIdeal, QAlgK, QAlgQ};
use crate::arith;
use crate::quadfield::{QuadField, SplitType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Algebra {
    Rational(QAlgQ),
    Quadratic(QAlgK),
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algebra::Rational(b) => b.fmt(f),
            Algebra::Quadratic(a) => a.fmt(f),
        }
    }
}

struct Cursor {
    chars: Vec<(usize, char)>,
    pos: usize,
    end_col: usize,
}

impl Cursor {
    fn new(s: &str) -> Self {
        let chars: Vec<(usize, char)> =
            s.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| (i + 1, c)).collect();
        Self { chars, pos: 0, end_col: s.chars().count() + 1 }
    }

    fn col(&self) -> usize {
        self.chars.get(self.pos).map_or(self.end_col, |&(c, _)| c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { column: self.col(), message: message.into() })
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.err(format!("expected '{want}', found '{c}'")),
            None => self.err(format!("expected '{want}', found end of input")),
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let start = self.col();
        let neg = self.peek() == Some('-');
        if neg {
            self.pos += 1;
        }
        let mut digits = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            digits.push(c);
            self.pos += 1;
        }
        if digits.is_empty() {
            return self.err("expected an integer");
        }
        let v: i64 =
            digits.parse().map_err(|_| ParseError { column: start, message: "integer out of range".into() })?;
        Ok(if neg { -v } else { v })
    }

    fn prime(&mut self) -> Result<u64, ParseError> {
        let col = self.col();
        let v = self.integer()?;
        if v < 2 || !arith::is_prime(v as u64) {
            return Err(ParseError { column: col, message: format!("{v} is not prime") });
        }
        Ok(v as u64)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected trailing '{c}'")),
        }
    }
}

pub fn parse_algebra(s: &str) -> Result<Algebra, ParseError> {
    let mut cur = Cursor::new(s);
    match cur.peek() {
        Some('Q') => {
            cur.pos += 1;
            parse_q_body(&mut cur).map(Algebra::Rational)
        }
        Some('K') => {
            cur.pos += 1;
            cur.expect('[')?;
            let col = cur.col();
            let disc = cur.integer()?;
            let field =
                QuadField::from_discriminant(disc).map_err(|e| ParseError { column: col, message: e.to_string() })?;
            if !field.is_imaginary() {
                return Err(ParseError { column: col, message: format!("discriminant {disc} is not negative") });
            }
            cur.expect(']')?;
            parse_k_body(&mut cur, field).map(Algebra::Quadratic)
        }
        Some(c) => cur.err(format!("expected 'Q' or 'K', found '{c}'")),
        None => cur.err("empty algebra"),
    }
}

pub fn parse_rational(s: &str) -> Result<QAlgQ, ParseError> {
    match parse_algebra(s)? {
        Algebra::Rational(b) => Ok(b),
        Algebra::Quadratic(_) => Err(ParseError { column: 1, message: "expected an algebra over Q".into() }),
    }
}

pub fn parse_quadratic(s: &str) -> Result<QAlgK, ParseError> {
    match parse_algebra(s)? {
        Algebra::Quadratic(a) => Ok(a),
        Algebra::Rational(_) => {
            Err(ParseError { column: 1, message: "expected an algebra over an imaginary quadratic field".into() })
        }
    }
}

fn parse_list(cur: &mut Cursor, mut item: impl FnMut(&mut Cursor) -> Result<(), ParseError>) -> Result<(), ParseError> {
    cur.expect('{')?;
    if cur.peek() == Some('}') {
        cur.pos += 1;
        return cur.finish();
    }
    loop {
        item(cur)?;
        match cur.peek() {
            Some(',') => cur.pos += 1,
            Some('}') => {
                cur.pos += 1;
                return cur.finish();
            }
            Some(c) => return cur.err(format!("expected ',' or '}}', found '{c}'")),
            None => return cur.err("unterminated '{'"),
        }
    }
}

fn parse_q_body(cur: &mut Cursor) -> Result<QAlgQ, ParseError> {
    let mut primes = Vec::new();
    let mut inf = false;
    parse_list(cur, |cur| {
        let col = cur.col();
        if cur.peek() == Some('i') {
            for c in "inf".chars() {
                cur.expect(c)?;
            }
            if inf {
                return Err(ParseError { column: col, message: "duplicate 'inf'".into() });
            }
            inf = true;
            return Ok(());
        }
        let p = cur.prime()?;
        if primes.contains(&p) {
            return Err(ParseError { column: col, message: format!("duplicate prime {p}") });
        }
        primes.push(p);
        Ok(())
    })?;
    Ok(QAlgQ::new(primes, inf))
}

fn parse_k_body(cur: &mut Cursor, field: QuadField) -> Result<QAlgK, ParseError> {
    let mut ideals: Vec<PrimeIdeal> = Vec::new();
    parse_list(cur, |cur| {
        let col = cur.col();
        let p = cur.prime()?;
        let tag_col = cur.col();
        let (tag, want) = match cur.peek() {
            Some('+') => (IdealTag::First, SplitType::Split),
            Some('-') => (IdealTag::Second, SplitType::Split),
            Some('i') => (IdealTag::Unique, SplitType::Inert),
            Some('r') => (IdealTag::Unique, SplitType::Ramified),
            _ => return cur.err("expected one of '+', '-', 'i', 'r' after the prime"),
        };
        cur.pos += 1;
        let actual = field.splitting_type(p);
        if actual != want {
            return Err(ParseError {
                column: tag_col,
                message: format!("{p} is {actual:?} in {field}, not {want:?}").to_lowercase(),
            });
        }
        let ideal = PrimeIdeal { p, tag };
        if ideals.contains(&ideal) {
            return Err(ParseError { column: col, message: format!("duplicate ideal above {p}") });
        }
        ideals.push(ideal);
        Ok(())
    })?;
    Ok(QAlgK::new(field, ideals).expect("field checked imaginary"))
}
