//! Double-precision evaluator for symbolic bound expressions such as
//! `2*n*(1 + log(4/3, n))`. Used when comparing exact rational
//! expectations against irrational bounds; callers apply their own slack.
//!
//! Grammar: `+ - * /`, unary minus, `log(base, x)`, `floor(x)`, decimal
//! numerals, variables, parentheses.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("bound expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

pub fn eval_bound(text: &str, env: &BTreeMap<String, f64>) -> Result<f64, BoundError> {
    let mut p = BoundParser { text: text.as_bytes(), pos: 0, env };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(BoundError::Parse { pos: p.pos, msg: "trailing input".into() });
    }
    Ok(v)
}

struct BoundParser<'a> {
    text: &'a [u8],
    pos: usize,
    env: &'a BTreeMap<String, f64>,
}

impl BoundParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), BoundError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(BoundError::Parse { pos: self.pos, msg: format!("expected `{}`", c as char) })
        }
    }

    fn expr(&mut self) -> Result<f64, BoundError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc += self.term()?;
            } else if self.eat(b'-') {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<f64, BoundError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc *= self.factor()?;
            } else if self.eat(b'/') {
                let d = self.factor()?;
                if d == 0.0 {
                    return Err(BoundError::Domain("division by zero".into()));
                }
                acc /= d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<f64, BoundError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident();
                match name.as_str() {
                    "log" => {
                        self.expect(b'(')?;
                        let base = self.expr()?;
                        self.expect(b',')?;
                        let x = self.expr()?;
                        self.expect(b')')?;
                        if base <= 0.0 || base == 1.0 {
                            return Err(BoundError::Domain(format!("log base {base}")));
                        }
                        if x <= 0.0 {
                            return Err(BoundError::Domain(format!("log of {x}")));
                        }
                        Ok(x.ln() / base.ln())
                    }
                    "floor" => {
                        self.expect(b'(')?;
                        let x = self.expr()?;
                        self.expect(b')')?;
                        Ok(x.floor())
                    }
                    _ => self
                        .env
                        .get(&name)
                        .copied()
                        .ok_or(BoundError::UnknownVariable(name)),
                }
            }
            _ => Err(BoundError::Parse { pos: self.pos, msg: "expected a factor".into() }),
        }
    }

    fn number(&mut self) -> Result<f64, BoundError> {
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_digit() || self.text[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        s.parse()
            .map_err(|_| BoundError::Parse { pos: start, msg: format!("bad number `{s}`") })
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).unwrap().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn arithmetic_and_precedence() {
        let e = env(&[]);
        assert_eq!(eval_bound("2 + 3 * 4", &e).unwrap(), 14.0);
        assert_eq!(eval_bound("(2 + 3) * 4", &e).unwrap(), 20.0);
        assert_eq!(eval_bound("-2 * -3", &e).unwrap(), 6.0);
        assert_eq!(eval_bound("floor(7/2)", &e).unwrap(), 3.0);
    }

    #[test]
    fn quicksort_cost_formula() {
        // cost(n) = 2n * (1 + log_{4/3}(n))
        let formula = "2*n*(1 + log(4/3, n))";
        let at = |n: f64| eval_bound(formula, &env(&[("n", n)])).unwrap();
        assert!((at(1.0) - 2.0).abs() < 1e-12, "log base 4/3 of 1 is 0");
        assert!((at(4.0) - 46.550729).abs() < 1e-5);
    }

    #[test]
    fn counter_bound_formula() {
        let v = eval_bound("2*m/p", &env(&[("m", 4.0), ("p", 0.5)])).unwrap();
        assert_eq!(v, 16.0);
    }

    #[test]
    fn domain_and_parse_errors() {
        let e = env(&[]);
        assert!(matches!(eval_bound("log(2, 0)", &e), Err(BoundError::Domain(_))));
        assert!(matches!(eval_bound("log(1, 5)", &e), Err(BoundError::Domain(_))));
        assert!(matches!(eval_bound("1 / 0", &e), Err(BoundError::Domain(_))));
        assert!(matches!(eval_bound("2 +", &e), Err(BoundError::Parse { .. })));
        assert!(matches!(eval_bound("2 3", &e), Err(BoundError::Parse { .. })));
        assert!(matches!(eval_bound("q + 1", &e), Err(BoundError::UnknownVariable(_))));
    }
}
