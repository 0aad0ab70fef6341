//! Arithmetic for the `Calculate` tool: `+ - * /`, parentheses, unary sign,
//! and the aggregates `mean(…)` and `sqrt(…)`.

use super::ToolError;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn err(msg: impl Into<String>) -> ToolError {
    ToolError::Calc(msg.into())
}

impl<'a> Parser<'a> {
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

    fn expr(&mut self) -> Result<f64, ToolError> {
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

    fn term(&mut self) -> Result<f64, ToolError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc *= self.unary()?;
            } else if self.eat(b'/') {
                let d = self.unary()?;
                if d == 0.0 {
                    return Err(err("division by zero"));
                }
                acc /= d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ToolError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<f64, ToolError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(err("missing `)`"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(c) => Err(err(format!("unexpected `{}`", c as char))),
            None => Err(err("unexpected end of formula")),
        }
    }

    fn number(&mut self) -> Result<f64, ToolError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse().map_err(|_| err(format!("bad number `{text}`")))
    }

    fn call(&mut self) -> Result<f64, ToolError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default().to_ascii_lowercase();
        if !self.eat(b'(') {
            return Err(err(format!("expected `(` after {name}")));
        }
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        if !self.eat(b')') {
            return Err(err("missing `)`"));
        }
        match name.as_str() {
            "mean" => Ok(args.iter().sum::<f64>() / args.len() as f64),
            "sqrt" => {
                let [x] = args[..] else {
                    return Err(err("sqrt takes one argument"));
                };
                if x < 0.0 {
                    return Err(err("sqrt of a negative number"));
                }
                Ok(x.sqrt())
            }
            other => Err(err(format!("unknown function `{other}`"))),
        }
    }
}

pub fn evaluate(formula: &str) -> Result<f64, ToolError> {
    let mut p = Parser { src: formula.as_bytes(), pos: 0 };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(err(format!("unexpected trailing input `{}`", &formula[p.pos..])));
    }
    if !v.is_finite() {
        return Err(err("result is not finite"));
    }
    Ok(v)
}

/// Up to six fractional digits, trailing zeros trimmed.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn calculate(formula: &str) -> Result<String, ToolError> {
    evaluate(formula).map(format_number)
}
