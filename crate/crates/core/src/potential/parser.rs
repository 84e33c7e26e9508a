//! Lexer and Pratt parser for the potential DSL.
//!
//! ```text
//! source     = kind ":" [ param { "," param } "," ] body ;
//! kind       = "radial" | "blockradial" | "expr" ;
//! param      = ident "=" const_expr | "dims" "=" "[" int { "," int } "]" ;
//! body       = [ "U" "=" ] expr ;
//! expr       = term { ("+" | "-") term } ;
//! term       = unary { ("*" | "/") unary } ;
//! unary      = "-" unary | power ;
//! power      = atom [ "^" integer ] ;
//! atom       = number | ident | "norm2" "(" ")" | "(" expr ")" ;
//! ```
//!
//! Variables are `t` (radial), `t1..tm` (blockradial) and `x1..xn` (expr).

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::scalar::Rational;

use super::ast::Expr;
use super::{BlockRadialPolynomial, ExpressionPotential, PotentialError, PotentialSpec, RadialPolynomial};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: Rational, integer: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

fn syntax(src: &str, offset: usize, message: impl Into<String>) -> PotentialError {
    let (line, column) = line_col(src, offset);
    PotentialError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let numer: i128 = digits.parse().ok()?;
    let denom = 10i128.checked_pow(frac_part.len() as u32)?;
    Some(Rational::new(numer, denom))
}

fn tokenize(src: &str, start: usize) -> Result<Vec<Token>, PotentialError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = start;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, offset: i });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let begin = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let text = &src[begin..i];
            let value = parse_decimal(text).ok_or_else(|| syntax(src, begin, format!("malformed number `{text}`")))?;
            out.push(Token {
                tok: Tok::Num {
                    value,
                    integer: !text.contains('.'),
                },
                offset: begin,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[begin..i].to_string()),
                offset: begin,
            });
            continue;
        }
        return Err(syntax(src, i, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Radial,
    BlockRadial,
    Expr,
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
    kind: Kind,
    params: &'a BTreeMap<String, Rational>,
    end_offset: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_offset, |t| t.offset)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), PotentialError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.src, self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, PotentialError> {
        let mut lhs = self.prefix()?;
        loop {
            let (bp, op) = match self.peek() {
                Some(Tok::Plus) => (1, Tok::Plus),
                Some(Tok::Minus) => (1, Tok::Minus),
                Some(Tok::Star) => (2, Tok::Star),
                Some(Tok::Slash) => (2, Tok::Slash),
                Some(Tok::Caret) => (4, Tok::Caret),
                _ => break,
            };
            if bp < min_bp {
                break;
            }
            self.pos += 1;
            if op == Tok::Caret {
                let at = self.offset();
                let exponent = match self.bump().map(|t| t.tok.clone()) {
                    Some(Tok::Num { value, integer: true }) if value.is_integer() => value.to_integer(),
                    _ => {
                        return Err(PotentialError::NonIntegerExponent {
                            line: line_col(self.src, at).0,
                            column: line_col(self.src, at).1,
                        })
                    }
                };
                let exponent = u32::try_from(exponent).map_err(|_| syntax(self.src, at, "exponent out of range"))?;
                lhs = Expr::Pow(Box::new(lhs), exponent);
                continue;
            }
            let rhs = self.expr(bp + 1)?;
            lhs = match op {
                Tok::Plus => Expr::Add(Box::new(lhs), Box::new(rhs)),
                Tok::Minus => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                Tok::Star => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                _ => Expr::Div(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, PotentialError> {
        let at = self.offset();
        let Some(tok) = self.bump().map(|t| t.tok.clone()) else {
            return Err(syntax(self.src, at, "unexpected end of input"));
        };
        match tok {
            Tok::Minus => Ok(Expr::Neg(Box::new(self.expr(3)?))),
            Tok::Num { value, .. } => Ok(Expr::Num(value)),
            Tok::LParen => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, at),
            other => Err(syntax(self.src, at, format!("unexpected token {other:?}"))),
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Expr, PotentialError> {
        if self.params.contains_key(name) {
            return Ok(Expr::Param(name.to_string()));
        }
        let indexed = |prefix: char| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            let i: usize = rest.parse().ok()?;
            (i >= 1 && !rest.starts_with('0')).then(|| i - 1)
        };
        match self.kind {
            Kind::Radial if name == "t" => return Ok(Expr::Var(0)),
            Kind::BlockRadial => {
                if let Some(i) = indexed('t') {
                    return Ok(Expr::Var(i));
                }
            }
            Kind::Expr => {
                if let Some(i) = indexed('x') {
                    return Ok(Expr::Var(i));
                }
                if name == "norm2" {
                    self.expect(Tok::LParen, "`(` after norm2")?;
                    self.expect(Tok::RParen, "`)` after norm2(")?;
                    return Ok(Expr::Norm2);
                }
            }
            _ => {}
        }
        let (line, column) = line_col(self.src, at);
        Err(PotentialError::UnknownIdentifier {
            name: name.to_string(),
            line,
            column,
        })
    }
}

/// Split on commas outside of parentheses and brackets.
fn split_top_level(toks: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket => depth -= 1,
            Tok::Comma if depth == 0 => {
                out.push(&toks[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&toks[start..]);
    out
}

fn parse_full(
    src: &str,
    toks: &[Token],
    kind: Kind,
    params: &BTreeMap<String, Rational>,
    end_offset: usize,
) -> Result<Expr, PotentialError> {
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        kind,
        params,
        end_offset,
    };
    if toks.is_empty() {
        return Err(syntax(src, end_offset, "missing expression"));
    }
    let e = p.expr(0)?;
    if p.pos < toks.len() {
        return Err(syntax(src, p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

fn parse_dims(src: &str, toks: &[Token]) -> Result<Vec<usize>, PotentialError> {
    let at = toks.first().map_or(0, |t| t.offset);
    if toks.first().map(|t| &t.tok) != Some(&Tok::LBracket) || toks.last().map(|t| &t.tok) != Some(&Tok::RBracket) {
        return Err(syntax(src, at, "dims must be a list like [2,2]"));
    }
    let mut dims = Vec::new();
    for (i, t) in toks[1..toks.len() - 1].iter().enumerate() {
        match (&t.tok, i % 2) {
            (Tok::Num { value, integer: true }, 0) if *value > Rational::zero() => {
                dims.push(value.to_integer() as usize)
            }
            (Tok::Comma, 1) => {}
            _ => return Err(syntax(src, t.offset, "dims entries must be positive integers")),
        }
    }
    if dims.is_empty() {
        return Err(syntax(src, at, "dims must not be empty"));
    }
    Ok(dims)
}

/// Parse DSL source into a [`PotentialSpec`].
pub fn parse_potential(source: &str) -> Result<PotentialSpec, PotentialError> {
    if source.trim().is_empty() {
        return Err(PotentialError::Empty);
    }
    let colon = source
        .find(':')
        .ok_or_else(|| syntax(source, 0, "expected `kind:` prefix"))?;
    let kind_text = source[..colon].trim();
    let kind = match kind_text {
        "radial" => Kind::Radial,
        "blockradial" => Kind::BlockRadial,
        "expr" => Kind::Expr,
        other => {
            let off = source.find(other).unwrap_or(0);
            return Err(syntax(
                source,
                off,
                format!("unknown potential kind `{other}` (expected radial, blockradial or expr)"),
            ));
        }
    };
    let toks = tokenize(source, colon + 1)?;
    let segments = split_top_level(&toks);
    let (body, param_segs) = segments.split_last().expect("split yields at least one segment");

    let mut params: BTreeMap<String, Rational> = BTreeMap::new();
    let mut dims: Option<Vec<usize>> = None;
    for seg in param_segs {
        let at = seg.first().map_or(source.len(), |t| t.offset);
        let name = match (seg.first().map(|t| &t.tok), seg.get(1).map(|t| &t.tok)) {
            (Some(Tok::Ident(name)), Some(Tok::Eq)) => name.clone(),
            _ => return Err(syntax(source, at, "expected `name = value` parameter")),
        };
        if params.contains_key(&name) || (name == "dims" && dims.is_some()) {
            return Err(syntax(source, at, format!("duplicate parameter `{name}`")));
        }
        if name == "dims" {
            dims = Some(parse_dims(source, &seg[2..])?);
            continue;
        }
        let end = seg.last().map_or(source.len(), |t| t.offset + 1);
        let value = parse_full(source, &seg[2..], Kind::Radial, &params, end)?
            .eval_constant(&params)
            .map_err(|e| match e {
                PotentialError::NotPolynomial(_) => {
                    syntax(source, at, format!("parameter `{name}` must be a constant"))
                }
                other => other,
            })?;
        params.insert(name, value);
    }

    let body = match (body.first().map(|t| &t.tok), body.get(1).map(|t| &t.tok)) {
        (Some(Tok::Ident(u)), Some(Tok::Eq)) if u == "U" => &body[2..],
        _ => *body,
    };
    let expr = parse_full(source, body, kind, &params, source.len())?;

    match kind {
        Kind::Radial => {
            if dims.is_some() {
                return Err(syntax(source, colon, "dims is only valid for blockradial"));
            }
            let poly = expr.to_poly(1, &params)?;
            let coeffs = poly.univariate_coeffs().expect("single-variable polynomial");
            Ok(PotentialSpec::Radial(RadialPolynomial::new(coeffs)))
        }
        Kind::BlockRadial => {
            let used = expr.arity();
            let dims = match dims {
                Some(d) => {
                    if d.len() < used {
                        return Err(syntax(
                            source,
                            colon,
                            format!("dims lists {} blocks but t{used} is used", d.len()),
                        ));
                    }
                    d
                }
                None => vec![2; used.max(1)],
            };
            let omega = params.remove("omega");
            let eps = params.remove("eps").unwrap_or_else(|| Rational::from_integer(1));
            let mut all = params.clone();
            if let Some(w) = omega {
                all.insert("omega".into(), w);
            }
            all.insert("eps".into(), eps);
            let poly = expr.to_poly(dims.len(), &all)?;
            Ok(PotentialSpec::BlockRadial(BlockRadialPolynomial::new(
                dims, poly, omega, eps,
            )))
        }
        Kind::Expr => {
            if dims.is_some() {
                return Err(syntax(source, colon, "dims is only valid for blockradial"));
            }
            let dim = match params.remove("n") {
                Some(n) if n.is_integer() && n > Rational::zero() => Some(n.to_integer() as usize),
                Some(_) => return Err(syntax(source, colon, "n must be a positive integer")),
                None => None,
            };
            if let Some(d) = dim {
                if expr.arity() > d {
                    return Err(syntax(source, colon, format!("x{} used but n = {d}", expr.arity())));
                }
            }
            Ok(PotentialSpec::Expression(ExpressionPotential::new(expr, params, dim)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_exact() {
        assert_eq!(parse_decimal("0.25"), Some(Rational::new(1, 4)));
        assert_eq!(parse_decimal("12"), Some(Rational::from_integer(12)));
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_potential("expr:\n  x1 + $").unwrap_err();
        match err {
            PotentialError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_fractional_exponent() {
        let err = parse_potential("radial: t^2.5").unwrap_err();
        assert!(matches!(
            err,
            PotentialError::NonIntegerExponent { line: 1, column: 11 }
        ));
        let err = parse_potential("expr: x1^(1/2)").unwrap_err();
        assert!(matches!(err, PotentialError::NonIntegerExponent { .. }));
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse_potential("radial: t + y").unwrap_err();
        assert!(matches!(err, PotentialError::UnknownIdentifier { ref name, column: 13, .. } if name == "y"));
        let err = parse_potential("expr: x0").unwrap_err();
        assert!(matches!(err, PotentialError::UnknownIdentifier { .. }));
    }

    #[test]
    fn rejects_empty_and_unknown_kind() {
        assert!(matches!(parse_potential("   "), Err(PotentialError::Empty)));
        assert!(matches!(
            parse_potential("polar: t"),
            Err(PotentialError::Syntax { .. })
        ));
        assert!(matches!(
            parse_potential("radial: "),
            Err(PotentialError::Syntax { .. })
        ));
    }

    #[test]
    fn radial_rejects_variable_division() {
        assert!(matches!(
            parse_potential("radial: 1/t"),
            Err(PotentialError::NotPolynomial(_))
        ));
    }
}
