//! Text forms: representations `R[1,0]+R[2,3]`, ring elements `-I + 2*Z3`,
//! and ring expressions with `inv(...)` and `chi(S^"...")`.
//!
//! ```text
//! expr  = term { ("+" | "-") term } ;
//! term  = unary { "*" unary } ;
//! unary = "-" unary | atom ;
//! atom  = integer | "I" | "Theta" | "Z" integer | "inv(" expr ")"
//!       | "chi(S^" '"' representation '"' ")" | "(" expr ")" ;
//! ```
//! An integer `n` stands for `n·I`.

use super::{chi_sphere, EulerError, EulerRingElement, S1Representation};

fn err(position: usize, message: impl Into<String>) -> EulerError {
    EulerError::Parse {
        position,
        message: message.into(),
    }
}

/// Parse `R[k,m]` terms joined by `+`; `0` is the zero representation.
pub fn parse_representation(text: &str) -> Result<S1Representation, EulerError> {
    let trimmed = text.trim();
    let mut rep = S1Representation::default();
    if trimmed == "0" {
        return Ok(rep);
    }
    let base = text.len() - text.trim_start().len();
    let mut offset = base;
    for part in trimmed.split('+') {
        let term = part.trim();
        let at = offset + (part.len() - part.trim_start().len());
        offset += part.len() + 1;
        let inner = term
            .strip_prefix("R[")
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| err(at, format!("expected `R[k,m]`, found `{term}`")))?;
        let (k, m) = inner
            .split_once(',')
            .ok_or_else(|| err(at, "expected `R[k,m]` with two integers"))?;
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| err(at, "multiplicity must be a non-negative integer"))?;
        let m: u32 = m
            .trim()
            .parse()
            .map_err(|_| err(at, "mode must be a non-negative integer"))?;
        rep.add_mode(m, k);
    }
    Ok(rep)
}

/// Parse an element in canonical text form (any ring expression is accepted).
pub fn parse_element(text: &str) -> Result<EulerRingElement, EulerError> {
    eval_expression(text)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, EulerError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if c.is_whitespace() {
            i += 1;
        } else if let Some(t) = single {
            out.push((t, pos));
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            let v = s.parse().map_err(|_| err(pos, "integer literal too large"))?;
            out.push((Tok::Int(v), pos));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().map(|p| p.1).collect()), pos));
        } else if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].1 != '"' {
                i += 1;
            }
            if i == chars.len() {
                return Err(err(pos, "unterminated string"));
            }
            out.push((Tok::Str(chars[start..i].iter().map(|p| p.1).collect()), pos));
            i += 1;
        } else {
            return Err(err(pos, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Eval {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Eval {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), EulerError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(err(self.at(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<EulerRingElement, EulerError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.checked_add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.checked_sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<EulerRingElement, EulerError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            acc = acc.checked_mul(&self.unary()?)?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<EulerRingElement, EulerError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return self.unary()?.checked_neg();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<EulerRingElement, EulerError> {
        let at = self.at();
        let tok = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        match tok {
            Some(Tok::Int(n)) => Ok(EulerRingElement::new(n, [])),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "I" => Ok(EulerRingElement::one()),
                "Theta" => Ok(EulerRingElement::zero()),
                "inv" => {
                    self.expect(Tok::LParen, "`(` after inv")?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    e.invert()
                }
                "chi" => {
                    self.expect(Tok::LParen, "`(` after chi")?;
                    match self.peek() {
                        Some(Tok::Ident(s)) if s == "S" => self.pos += 1,
                        _ => return Err(err(self.at(), "expected `S^\"...\"` inside chi(...)")),
                    }
                    self.expect(Tok::Caret, "`^`")?;
                    let str_at = self.at();
                    let rep = match self.toks.get(self.pos).map(|t| t.0.clone()) {
                        Some(Tok::Str(s)) => {
                            self.pos += 1;
                            parse_representation(&s).map_err(|e| match e {
                                EulerError::Parse { position, message } => err(str_at + 1 + position, message),
                                other => other,
                            })?
                        }
                        _ => return Err(err(str_at, "expected a quoted representation")),
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    chi_sphere(&rep)
                }
                z if z.len() > 1 && z.starts_with('Z') => {
                    let k: u32 = z[1..]
                        .parse()
                        .ok()
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| err(at, format!("bad torus generator `{z}`")))?;
                    Ok(EulerRingElement::torus_generator(k))
                }
                _ => Err(err(at, format!("unknown identifier `{name}`"))),
            },
            Some(t) => Err(err(at, format!("unexpected token {t:?}"))),
            None => Err(err(at, "unexpected end of input")),
        }
    }
}

/// Evaluate a ring expression.
pub fn eval_expression(src: &str) -> Result<EulerRingElement, EulerError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(err(0, "empty expression"));
    }
    let mut ev = Eval {
        toks,
        pos: 0,
        end: src.len(),
    };
    let v = ev.expr()?;
    if ev.pos < ev.toks.len() {
        return Err(err(ev.at(), "trailing input"));
    }
    Ok(v)
}
