//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Exponents may carry a leading minus sign so that printed derivatives parse back.

use thiserror::Error;

use super::{Func, ScalarExpr};
use crate::chart::Chart;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if b.is_ascii_digit() || b == b'.' {
            let mut end = self.pos;
            let mut is_int = true;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                is_int = false;
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    is_int = false;
                    end = k;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            if is_int {
                if let Ok(i) = text.parse::<i64>() {
                    return Ok((Tok::Int(i), start));
                }
            }
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), start))
                .map_err(|_| ParseError::Syntax { pos: start, msg: format!("malformed number `{}`", text) });
        }
        if b.is_ascii_alphabetic() {
            let mut end = self.pos + 1;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if b"+-*/^()".contains(&b) {
            self.pos += 1;
            return Ok((Tok::Op(b as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax { pos: start, msg: format!("unexpected character `{}`", ch) })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
    chart: &'a Chart,
    constants: &'a [(&'a str, f64)],
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (t, p) = self.lexer.next_token()?;
        self.tok = t;
        self.tok_pos = p;
        Ok(())
    }

    fn error<T>(&self, msg: &str) -> Result<T, ParseError> {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("`{}`", v),
            Tok::Int(v) => format!("`{}`", v),
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Op(c) => format!("`{}`", c),
        };
        Err(ParseError::Syntax { pos: self.tok_pos, msg: format!("{}, found {}", msg, found) })
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.tok == Tok::Op(op) {
            self.advance()
        } else {
            self.error(&format!("expected `{}`", op))
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.advance()?;
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.advance()?;
                    terms.push(ScalarExpr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(ScalarExpr::sum(terms))
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    acc = ScalarExpr::product([acc, rhs]);
                }
                Tok::Op('/') => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    acc = ScalarExpr::quot(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.base()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.advance()?;
        let negative = if self.tok == Tok::Op('-') {
            self.advance()?;
            true
        } else {
            false
        };
        match self.tok {
            Tok::Int(n) => {
                let n = i32::try_from(n)
                    .ok()
                    .map(|n| if negative { -n } else { n })
                    .ok_or(ParseError::Syntax { pos: self.tok_pos, msg: "exponent out of range".into() })?;
                self.advance()?;
                Ok(ScalarExpr::pow(base, n))
            }
            _ => self.error("expected integer exponent"),
        }
    }

    fn base(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(ScalarExpr::Const(v))
            }
            Tok::Int(v) => {
                self.advance()?;
                Ok(ScalarExpr::Const(v as f64))
            }
            Tok::Op('-') => {
                self.advance()?;
                Ok(ScalarExpr::neg(self.base()?))
            }
            Tok::Op('(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let pos = self.tok_pos;
                self.advance()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok == Tok::Op('(') {
                        self.advance()?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        return Ok(ScalarExpr::call(func, arg));
                    }
                    return self.error(&format!("expected `(` after `{}`", name));
                }
                if self.chart.contains(&name) {
                    Ok(ScalarExpr::Coord(name))
                } else if name == "pi" {
                    Ok(ScalarExpr::Const(std::f64::consts::PI))
                } else if let Some((_, v)) = self.constants.iter().find(|(n, _)| *n == name) {
                    Ok(ScalarExpr::Const(*v))
                } else {
                    Err(ParseError::UnknownIdentifier { name, pos })
                }
            }
            _ => self.error("expected a number, identifier, `(` or `-`"),
        }
    }
}

/// Parses `src` against `chart`; every identifier must be a chart coordinate,
/// a recognized function, or `pi`.
pub fn parse(src: &str, chart: &Chart) -> Result<ScalarExpr, ParseError> {
    parse_with_constants(src, chart, &[])
}

/// As [`parse`], with additional named constants substituted at parse time.
/// Chart coordinates shadow constants of the same name.
pub fn parse_with_constants(src: &str, chart: &Chart, constants: &[(&str, f64)]) -> Result<ScalarExpr, ParseError> {
    let mut p = Parser { lexer: Lexer { src, pos: 0 }, tok: Tok::End, tok_pos: 0, chart, constants };
    p.advance()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.error("expected operator or end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::point;

    fn chart() -> Chart {
        Chart::noncompact(&["x1", "x2", "x3", "r", "gamma"]).unwrap()
    }

    #[test]
    fn sum_of_squares_is_a_three_term_sum() {
        let e = parse("x1^2 + x2^2 + x3^2", &chart()).unwrap();
        match e {
            ScalarExpr::Sum(ts) => {
                assert_eq!(ts.len(), 3);
                assert_eq!(ts[0], ScalarExpr::pow(ScalarExpr::coord("x1"), 2));
            }
            other => panic!("expected sum, got {:?}", other),
        }
    }

    #[test]
    fn chart_formula_tree() {
        let e = parse("sqrt(r^2 - x1^2) * sin(gamma)", &chart()).unwrap();
        let expected = ScalarExpr::product([
            ScalarExpr::sqrt(ScalarExpr::sum([
                ScalarExpr::pow(ScalarExpr::coord("r"), 2),
                ScalarExpr::neg(ScalarExpr::pow(ScalarExpr::coord("x1"), 2)),
            ])),
            ScalarExpr::sin(ScalarExpr::coord("gamma")),
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn trailing_operator_reports_end_position() {
        match parse("x1 + ", &chart()) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn other_syntax_errors() {
        let c = chart();
        assert!(matches!(parse("x1 x2", &c), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("(x1", &c), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1^2.5", &c), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("sin x1", &c), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x1 $ 2", &c), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("", &c), Err(ParseError::Syntax { pos: 0, .. })));
    }

    #[test]
    fn unknown_identifier_is_named() {
        assert_eq!(
            parse("x1 + theta", &chart()),
            Err(ParseError::UnknownIdentifier { name: "theta".into(), pos: 5 })
        );
    }

    #[test]
    fn constants_and_pi() {
        let c = chart();
        let e = parse_with_constants("0.5*I*r^2", &c, &[("I", 2.0)]).unwrap();
        assert_eq!(e.evaluate(&point([("r", 3.0)])).unwrap(), 9.0);
        let e = parse("cos(pi)", &c).unwrap();
        assert_eq!(e, ScalarExpr::Const(-1.0));
        let e = parse("1.5e-3 + 2E2 + .25", &c).unwrap();
        assert_eq!(e, ScalarExpr::Const(1.5e-3 + 2e2 + 0.25));
    }

    #[test]
    fn unary_minus_binds_to_base() {
        let c = chart();
        let e = parse("-x1^2", &c).unwrap();
        assert_eq!(e.evaluate(&point([("x1", 3.0)])).unwrap(), 9.0);
        let e = parse("2*-x1", &c).unwrap();
        assert_eq!(e.evaluate(&point([("x1", 3.0)])).unwrap(), -6.0);
        let e = parse("x1/x2/x3", &c).unwrap();
        assert_eq!(e.evaluate(&point([("x1", 8.0), ("x2", 2.0), ("x3", 2.0)])).unwrap(), 2.0);
    }
}
