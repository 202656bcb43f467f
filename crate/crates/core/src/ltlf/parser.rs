//! Concrete syntax for LTLf formulas.
//!
//! ```text
//! implies := or ( "->" implies )?
//! or      := and ( "|" and )*
//! and     := until ( "&" until )*
//! until   := unary ( ("U" | "R") until )?
//! unary   := ("!" | "X" | "WX" | "F" | "G") unary | "(" implies ")" | "true" | "false" | atom
//! ```
//!
//! Unicode aliases: `¬ ∧ ∨ → ⊤ ⊥`. `nomatch` is read as the reserved `noMatch`.

use std::collections::HashSet;

use super::formula::{Atom, Formula, NO_MATCH};
use crate::error::FormulaError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Next,
    WeakNext,
    Eventually,
    Always,
    Until,
    Release,
    True,
    False,
    Ident(String),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, FormulaError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next_token()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize), FormulaError> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = trimmed.chars().next() else {
            return Ok((Tok::End, start));
        };
        let single = |tok| (tok, c.len_utf8());
        let (tok, len) = match c {
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '!' | '¬' | '~' => single(Tok::Not),
            '&' | '∧' => single(Tok::And),
            '|' | '∨' => single(Tok::Or),
            '→' => single(Tok::Implies),
            '⊤' => single(Tok::True),
            '⊥' => single(Tok::False),
            '-' if trimmed.starts_with("->") => (Tok::Implies, 2),
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let len = trimmed
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(trimmed.len());
                let word = &trimmed[..len];
                let tok = match word {
                    "X" => Tok::Next,
                    "WX" => Tok::WeakNext,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "U" => Tok::Until,
                    "R" => Tok::Release,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "nomatch" | "noMatch" => Tok::Ident(NO_MATCH.to_string()),
                    w if Atom::is_valid_name(w) => Tok::Ident(w.to_string()),
                    w => {
                        return Err(FormulaError::Syntax {
                            offset: start,
                            message: format!("unknown operator or invalid atom `{w}`"),
                        })
                    }
                };
                (tok, len)
            }
            other => {
                return Err(FormulaError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        self.pos += len;
        Ok((tok, start))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    alphabet: &'a HashSet<&'a str>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn offset(&self) -> usize {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.idx].0.clone();
        if tok != Tok::End {
            self.idx += 1;
        }
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(lhs.until(self.until()?))
            }
            Tok::Release => {
                self.bump();
                Ok(lhs.release(self.until()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Next => {
                self.bump();
                Ok(self.unary()?.next())
            }
            Tok::WeakNext => {
                self.bump();
                Ok(self.unary()?.weak_next())
            }
            Tok::Eventually => {
                self.bump();
                Ok(self.unary()?.eventually())
            }
            Tok::Always => {
                self.bump();
                Ok(self.unary()?.always())
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                if *self.peek() != Tok::RParen {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::True.not())
            }
            Tok::Ident(name) => {
                if !self.alphabet.contains(name.as_str()) {
                    return Err(FormulaError::UndeclaredAtom(name));
                }
                self.bump();
                Ok(Formula::atom(Atom::new(name)?))
            }
            Tok::End => self.error("unexpected end of input"),
            other => self.error(format!("unexpected token {other:?}")),
        }
    }
}

/// Parses `text`, requiring every atom to be declared in `alphabet`.
pub fn parse_formula(text: &str, alphabet: &[Atom]) -> Result<Formula, FormulaError> {
    let declared: HashSet<&str> = alphabet.iter().map(Atom::as_str).collect();
    let toks = Lexer::tokens(text)?;
    let mut parser = Parser {
        toks,
        idx: 0,
        alphabet: &declared,
    };
    let formula = parser.implies()?;
    if *parser.peek() != Tok::End {
        return parser.error("trailing input");
    }
    Ok(formula)
}
