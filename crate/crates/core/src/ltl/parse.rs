//! Concrete syntax.
//!
//! | precedence (high to low) | operators            | associativity |
//! |--------------------------|----------------------|---------------|
//! | 1                        | `!`                  | prefix        |
//! | 2                        | `X`, `F`             | prefix        |
//! | 3                        | `U`                  | right         |
//! | 4                        | `&` (`&&`)           | left          |
//! | 5                        | `\|` (`\|\|`)        | left          |
//! | 6                        | `->`                 | right         |
//!
//! `true`, `false`, `X`, `F`, `U` and `G` are reserved; every other
//! identifier `[A-Za-z_][A-Za-z0-9_]*` is an atomic proposition. `G` is
//! recognized only to reject it.

use std::collections::BTreeSet;

use super::{normalize, Formula, LtlError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Eventually,
    Always,
    Until,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'!' | b'~' => out.push((Tok::Not, start)),
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                out.push((Tok::And, start));
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                out.push((Tok::Or, start));
            }
            b'-' => {
                if bytes.get(i + 1) != Some(&b'>') {
                    return Err(LtlError::Syntax { pos: start, msg: "expected `->`".into() });
                }
                i += 1;
                out.push((Tok::Implies, start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "U" => Tok::Until,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((tok, start));
                continue;
            }
            _ => {
                return Err(LtlError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{}`", c as char),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    universe: Option<&'a BTreeSet<String>>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn error(&self, msg: impl Into<String>) -> LtlError {
        LtlError::Syntax { pos: self.offset(), msg: msg.into() }
    }

    fn implies(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::Or(vec![Formula::not(lhs), rhs]));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut items = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::Or(items) })
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut items = vec![self.until()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            items.push(self.until()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::And(items) })
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Next) => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Tok::Always) => Err(LtlError::NotCoSafe(format!(
                "`G` (always) at byte {} is outside the co-safe fragment",
                self.offset()
            ))),
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, LtlError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::True) => Ok(Formula::True),
            Some(Tok::False) => Ok(Formula::False),
            Some(Tok::Ident(name)) => {
                if let Some(universe) = self.universe {
                    if !universe.contains(&name) {
                        return Err(LtlError::UnknownAtom { name, pos: at });
                    }
                }
                Ok(Formula::Atom(name))
            }
            Some(Tok::LParen) => {
                let inner = self.implies()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(LtlError::Syntax { pos: self.toks.get(self.pos - 1).map_or(self.end, |t| t.1), msg: "expected `)`".into() }),
                }
            }
            Some(t) => Err(LtlError::Syntax { pos: at, msg: format!("unexpected token {t:?}") }),
            None => Err(LtlError::Syntax { pos: at, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parse without normalizing or checking atoms: the raw AST as written.
pub fn parse_unchecked(text: &str) -> Result<Formula, LtlError> {
    parse_with(text, None)
}

fn parse_with(text: &str, universe: Option<&BTreeSet<String>>) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), universe };
    let f = p.implies()?;
    if p.pos < p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(f)
}

/// Parse `text` against the atomic propositions in `universe` and return the
/// canonical co-safe form.
pub fn parse(text: &str, universe: &BTreeSet<String>) -> Result<Formula, LtlError> {
    normalize(&parse_with(text, Some(universe))?)
}
