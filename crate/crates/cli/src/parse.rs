//! Surface syntax for fractional transfer functions.
//!
//! ```text
//! expr := side ["/" side]
//! side := "(" poly ")" | poly
//! poly := ["+"|"-"] term (("+"|"-") term)*
//! term := number ["*"] ["s" ["^" power]] | "s" ["^" power]
//! power := ["+"|"-"] number | "(" ["+"|"-"] number ")"
//! ```
//!
//! `s` stands for `jω`. A bare `s` has exponent 1 and a bare number has
//! exponent 0. Whitespace is ignored.

use fracfreq::{FractionalPolynomial, FractionalTF, FractionalTerm, ModelError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {}: {message}", .position + 1)]
    Syntax { position: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { position: self.pos, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        let mut any = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            any |= digits(self);
        }
        if !any {
            self.pos = start;
            return self.error("expected a number");
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.error(format!("invalid number '{text}'"))
            }
        }
    }

    fn power(&mut self) -> Result<f64, ParseError> {
        let paren = self.eat(b'(');
        let sign = if self.eat(b'-') {
            -1.0
        } else {
            self.eat(b'+');
            1.0
        };
        let v = sign * self.number()?;
        if paren && !self.eat(b')') {
            return self.error("expected ')' after exponent");
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<FractionalTerm, ParseError> {
        let coefficient = match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                self.eat(b'*');
                Some(v)
            }
            Some(b's') => None,
            Some(_) => return self.error("expected a coefficient or 's'"),
            None => return self.error("unexpected end of input"),
        };
        let exponent = if self.eat(b's') {
            if self.eat(b'^') {
                self.power()?
            } else {
                1.0
            }
        } else if coefficient.is_none() {
            return self.error("expected 's'");
        } else {
            0.0
        };
        Ok(FractionalTerm::new(coefficient.unwrap_or(1.0), exponent)?)
    }

    fn poly(&mut self) -> Result<FractionalPolynomial, ParseError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        loop {
            let mut t = self.term()?;
            t.coefficient *= sign;
            terms.push(t);
            if self.eat(b'+') {
                sign = 1.0;
            } else if self.eat(b'-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(FractionalPolynomial::new(terms)?)
    }

    fn side(&mut self, what: &str) -> Result<FractionalPolynomial, ParseError> {
        match self.peek() {
            None | Some(b')') => self.error(format!("empty {what}")),
            Some(b'(') => {
                self.pos += 1;
                if self.peek() == Some(b')') {
                    return self.error(format!("empty {what}"));
                }
                let p = self.poly()?;
                if !self.eat(b')') {
                    return self.error("expected ')'");
                }
                Ok(p)
            }
            Some(_) => self.poly(),
        }
    }
}

/// Parses `text` into a canonical transfer function.
pub fn parse_tf_text(text: &str) -> Result<FractionalTF, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let num = p.side("numerator")?;
    let den = if p.eat(b'/') {
        p.side("denominator")?
    } else {
        FractionalPolynomial::constant(1.0)?
    };
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(FractionalTF::new(num, den)?)
}
