//! Infix expression parser.
//!
//! Grammar: `+ - * / ^` with usual precedence; identifiers `t x u v w`; jet
//! coordinates `u_t`, `u_xx`, `v_x`, mixed `u_tx`; opaque calls `K(u)`, primes
//! `K'(u)`; elementary `exp ln sin cos sqrt`; rational literals via integers
//! and division. Exponents must be exact rational constants.

use super::{Dep, Elem, Expr, ExprError, OpaqueAtom, MAX_DT, MAX_DX};
use crate::rat::Rat;
use num_bigint::BigInt;
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Primes(u8),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str) -> Result<Lexer, ExprError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' | '−' => {
                toks.push((Tok::Minus, i));
                i += c.len_utf8();
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '\'' => {
                let start = i;
                let mut n = 0u8;
                while i < bytes.len() && bytes[i] == b'\'' {
                    n += 1;
                    i += 1;
                }
                toks.push((Tok::Primes(n), start));
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    return Err(ExprError::Syntax {
                        pos: i,
                        msg: "floating point literals are rejected; use exact rationals p/q".into(),
                    });
                }
                let n: BigInt = src[start..i].parse().unwrap();
                toks.push((Tok::Num(n), start));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let ch = bytes[i] as char;
                    if ch.is_alphanumeric() || ch == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ExprError::Syntax {
                    pos: i,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(Lexer { toks })
}

/// Parser context: when `params` is set, unknown identifiers are rejected
/// instead of being treated as free parameters.
#[derive(Default, Clone)]
pub struct ParseCtx {
    pub params: Option<BTreeSet<String>>,
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    ctx: &'a ParseCtx,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), ExprError> {
        let pos = self.here();
        match self.bump() {
            Some(got) if *got == t => Ok(()),
            got => Err(ExprError::Syntax {
                pos,
                msg: format!("expected {t:?}, found {got:?}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    acc = acc.div(&self.unary()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let e = self.exponent()?;
            return base.pow(&e);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Rat, ExprError> {
        // signed integer, or a parenthesized expression that must be rational
        let neg = if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.here();
        let r = match self.peek() {
            Some(Tok::Num(_)) => {
                let Some(Tok::Num(n)) = self.bump().cloned() else {
                    unreachable!()
                };
                Rat::from_integer(n)
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                e.as_rational().ok_or(ExprError::NonRationalExponent)?
            }
            _ => {
                return Err(ExprError::Syntax {
                    pos,
                    msg: "expected exponent".into(),
                })
            }
        };
        Ok(if neg { -r } else { r })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.here();
        match self.bump().cloned() {
            Some(Tok::Num(n)) => Ok(Expr::num(Rat::from_integer(n))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.ident(name, pos),
            got => Err(ExprError::Syntax {
                pos,
                msg: format!("expected a value, found {got:?}"),
            }),
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while matches!(self.peek(), Some(Tok::Comma)) {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        // primes (derivative marks) may follow a function name
        let primes = if let Some(Tok::Primes(n)) = self.peek() {
            let n = *n;
            self.bump();
            n
        } else {
            0
        };
        let is_call = matches!(self.peek(), Some(Tok::LParen));

        if is_call {
            if let Some(elem) = match name.as_str() {
                "exp" => Some(Elem::Exp),
                "ln" => Some(Elem::Ln),
                "sin" => Some(Elem::Sin),
                "cos" => Some(Elem::Cos),
                _ => None,
            } {
                if primes > 0 {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "primes are not allowed on elementary functions".into(),
                    });
                }
                let args = self.call_args()?;
                if args.len() != 1 {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: format!("{name} takes one argument"),
                    });
                }
                return Ok(Expr::elem(elem, args.into_iter().next().unwrap()));
            }
            if name == "sqrt" {
                let args = self.call_args()?;
                if args.len() != 1 {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "sqrt takes one argument".into(),
                    });
                }
                return Expr::sqrt(args.into_iter().next().unwrap());
            }
            let args = self.call_args()?;
            let d = if args.len() == 1 {
                vec![primes]
            } else {
                if primes > 0 {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "primes require a single-argument function".into(),
                    });
                }
                vec![0; args.len()]
            };
            return Ok(Expr::opaque(OpaqueAtom::new(name, args, d)));
        }
        if primes > 0 {
            return Err(ExprError::Syntax {
                pos,
                msg: "primes require a function call".into(),
            });
        }

        // plain identifier: independent variable, jet coordinate, or parameter
        match name.as_str() {
            "t" => return Ok(Expr::t()),
            "x" => return Ok(Expr::x()),
            _ => {}
        }
        if let Some(jet) = parse_jet_name(&name) {
            let (dep, dt, dx) = jet?;
            return Ok(Expr::jet(dep, dt, dx));
        }
        if let Some(allowed) = &self.ctx.params {
            if !allowed.contains(&name) {
                return Err(ExprError::UnknownSymbol(name));
            }
        }
        Ok(Expr::param(name))
    }
}

type JetSpec = (Dep, u8, u8);

/// `u`, `v`, `w`, `u_xx`, `v_t`, `u_tx`, ... -> jet coordinate.
fn parse_jet_name(name: &str) -> Option<Result<JetSpec, ExprError>> {
    let dep = match name.as_bytes().first()? {
        b'u' => Dep::U,
        b'v' => Dep::V,
        b'w' => Dep::W,
        _ => return None,
    };
    let rest = &name[1..];
    if rest.is_empty() {
        return Some(Ok((dep, 0, 0)));
    }
    let Some(idx) = rest.strip_prefix('_') else {
        return None; // e.g. "u2" is a parameter, not a jet
    };
    let mut dt = 0u8;
    let mut dx = 0u8;
    for c in idx.chars() {
        match c {
            't' => dt += 1,
            'x' => dx += 1,
            _ => return None,
        }
    }
    if dt + dx == 0 {
        return None;
    }
    if dt > MAX_DT || dx > MAX_DX {
        return Some(Err(ExprError::OrderOverflow(name.to_string())));
    }
    Some(Ok((dep, dt, dx)))
}

/// Parses with free parameters allowed.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    parse_with_ctx(src, &ParseCtx::default())
}

/// Parses with a declared parameter set; other identifiers error out.
pub fn parse_with_params(src: &str, params: &[&str]) -> Result<Expr, ExprError> {
    let ctx = ParseCtx {
        params: Some(params.iter().map(|s| s.to_string()).collect()),
    };
    parse_with_ctx(src, &ctx)
}

pub fn parse_with_ctx(src: &str, ctx: &ParseCtx) -> Result<Expr, ExprError> {
    let lexer = lex(src)?;
    let mut p = Parser {
        toks: &lexer.toks,
        pos: 0,
        ctx,
        src_len: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ExprError::Syntax {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}
