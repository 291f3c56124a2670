//! Parser for scalar-field expressions in scenario files.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, coordinates
//! `x1 … xN` (1-based) and the functions `exp sinh cosh sqrt ln`. Exponents
//! must be numeric constants.

use sclab::jets::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{msg} at offset {pos} in `{src}`")]
pub struct ParseError {
    pub src: String,
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let err = |pos: usize, msg: String| ParseError { src: src.to_string(), pos, msg };
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            let text = &src[pos..end];
            let v: f64 = text.parse().map_err(|_| err(chars[start].0, format!("bad number `{text}`")))?;
            out.push((pos, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(src.len(), |c| c.0);
            out.push((pos, Tok::Ident(src[pos..end].to_string())));
        } else if "+-*/^()".contains(ch) {
            out.push((pos, Tok::Op(ch)));
            i += 1;
        } else {
            return Err(err(pos, format!("unexpected character `{ch}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: String) -> ParseError {
        let pos = self.toks.get(self.at).map_or(self.src.len(), |t| t.0);
        ParseError { src: self.src.to_string(), pos, msg }
    }

    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.at) {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(c) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.at += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.at += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('-') {
            self.at += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.at += 1;
        let neg = if self.peek_op() == Some('-') {
            self.at += 1;
            true
        } else {
            false
        };
        let p = match self.toks.get(self.at) {
            Some((_, Tok::Num(v))) => *v,
            _ => return Err(self.err("exponent must be a numeric constant".into())),
        };
        self.at += 1;
        let p = if neg { -p } else { p };
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            Ok(base.powi(p as i32))
        } else {
            Ok(base.powf(p))
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.toks.get(self.at).cloned();
        match tok {
            Some((_, Tok::Num(v))) => {
                self.at += 1;
                Ok(Expr::c(v))
            }
            Some((_, Tok::Op('('))) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((_, Tok::Ident(name))) => {
                if let Some(idx) = name.strip_prefix('x').filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit())) {
                    let k: usize = idx.parse().map_err(|_| self.err(format!("bad coordinate `{name}`")))?;
                    if k == 0 || k > self.dim {
                        return Err(self.err(format!("coordinate `{name}` outside x1..x{}", self.dim)));
                    }
                    self.at += 1;
                    return Ok(Expr::x(k - 1));
                }
                let f: fn(Expr) -> Expr = match name.as_str() {
                    "exp" => Expr::exp,
                    "sinh" => Expr::sinh,
                    "cosh" => Expr::cosh,
                    "sqrt" => Expr::sqrt,
                    "ln" => Expr::ln,
                    _ => return Err(self.err(format!("unknown function `{name}`"))),
                };
                self.at += 1;
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(f(arg))
            }
            _ => Err(self.err("expected a number, coordinate, function or `(`".into())),
        }
    }
}

/// Parse an expression in the coordinates `x1 … x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, at: 0, dim };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(p.err("trailing input".into()));
    }
    Ok(e)
}
