use std::fmt;

use num_rational::Rational64;

use super::surface::Surface;
use crate::coeff::Coefficient;
use crate::expr::{Atom, FieldKind, FieldOp, Index, Point};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Unexpected character or token, or input ended early.
    Lexical(String),
    /// Wrong number of arguments to `eps` or `delta`.
    Arity {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    /// A binder whose name its body never uses.
    Unbound(String),
    /// A name bound twice on the same path, or a summed index used other than twice.
    Ambiguous(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::Lexical(m) => f.write_str(m),
            ParseErrorKind::Arity {
                name,
                expected,
                found,
            } => {
                write!(f, "`{name}` takes {expected} indices, found {found}")
            }
            ParseErrorKind::Unbound(n) => write!(f, "`{n}` is bound but not used"),
            ParseErrorKind::Ambiguous(n) => write!(f, "`{n}` is bound ambiguously"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer {
            src,
            toks: Vec::new(),
        };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v = src[start..i].parse::<i64>().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::Lexical("integer literal too large".into()),
                })?;
                lx.toks.push((Tok::Int(v), start));
            } else if b"[](),+-*/^".contains(&c) {
                lx.toks.push((Tok::Sym(c as char), i));
                i += 1;
            } else {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: i,
                    kind: ParseErrorKind::Lexical(format!("unexpected character `{ch}`")),
                });
            }
        }
        lx.toks.push((Tok::End, lx.src.len()));
        Ok(lx.toks)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

/// Parses the text grammar into a surface tree.
///
/// ```text
/// expr    := ['-'] product (('+'|'-') product)*
/// product := factor (['*'] factor)*
/// factor  := 'comm(' expr ',' expr ')' | 'int(' point ')(' expr ')'
///          | 'sum[' idx '](' expr ')' | '(' expr ')'
///          | 'eps[' idx ',' idx ',' idx ']' | 'delta[' idx ',' idx ']'
///          | ('E'|'B') '[' idx '](' point ')' deriv* | 'x[' idx '](' point ')'
///          | 'ddelta(' point ',' point ')' deriv* | 'P[' idx ']' | 'J[' idx ']'
///          | scalar
/// deriv   := 'd[' point ',' idx ']'
/// scalar  := int ['/' int] | ('hbar'|'eps0'|'I') ['^' ['-'] int]
/// ```
pub fn parse(text: &str) -> Result<Surface, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, pos: 0 };
    let s = p.expr()?;
    p.expect_end()?;
    Ok(s)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            kind: ParseErrorKind::Lexical(msg.into()),
        })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected `{c}`, found {}",
                Self::describe(self.peek())
            ))
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            t => self.err(format!("unexpected {}", Self::describe(t))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Surface, ParseError> {
        let mut parts = Vec::new();
        let mut negate = self.eat('-');
        loop {
            let p = self.product()?;
            parts.push(if negate { Surface::neg(p) } else { p });
            if self.eat('+') {
                negate = false;
            } else if self.eat('-') {
                negate = true;
            } else {
                break;
            }
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Surface::Sum(parts)
        })
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Int(_) | Tok::Sym('('))
    }

    fn product(&mut self) -> Result<Surface, ParseError> {
        let mut coeff = Coefficient::one();
        let mut factors = Vec::new();
        loop {
            match self.factor()? {
                Factor::Scalar(c) => coeff = coeff * c,
                Factor::Node(s) => factors.push(s),
            }
            if self.eat('*') {
                continue;
            }
            if !self.starts_factor() {
                break;
            }
        }
        let body = if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Surface::Product(factors)
        };
        Ok(if coeff == Coefficient::one() {
            body
        } else {
            Surface::scaled(coeff, body)
        })
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected a name, found {}", Self::describe(&t))),
        }
    }

    fn index(&mut self) -> Result<Index, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Index::Named(s))
            }
            Tok::Int(v @ 1..=3) => {
                self.bump();
                Ok(Index::Fixed(v as u8))
            }
            t => self.err(format!("expected an index, found {}", Self::describe(&t))),
        }
    }

    fn point(&mut self) -> Result<Point, ParseError> {
        Ok(Point(self.ident()?))
    }

    /// `[` idx (`,` idx)* `]` with an arity check.
    fn index_list(
        &mut self,
        name: &'static str,
        expected: usize,
    ) -> Result<Vec<Index>, ParseError> {
        let start = self.offset();
        self.expect('[')?;
        let mut out = vec![self.index()?];
        while self.eat(',') {
            out.push(self.index()?);
        }
        self.expect(']')?;
        if out.len() != expected {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::Arity {
                    name,
                    expected,
                    found: out.len(),
                },
            });
        }
        Ok(out)
    }

    fn paren_point(&mut self) -> Result<Point, ParseError> {
        self.expect('(')?;
        let p = self.point()?;
        self.expect(')')?;
        Ok(p)
    }

    /// Trailing `d[point, idx]` derivatives. Returns (point, index) pairs.
    fn derivs(&mut self) -> Result<Vec<(Point, Index, usize)>, ParseError> {
        let mut out = Vec::new();
        while matches!(self.peek(), Tok::Ident(s) if s == "d") && self.peek_at(1) == &Tok::Sym('[')
        {
            let at = self.offset();
            self.bump();
            self.expect('[')?;
            let p = self.point()?;
            self.expect(',')?;
            let ix = self.index()?;
            self.expect(']')?;
            out.push((p, ix, at));
        }
        Ok(out)
    }

    fn unit_power(&mut self) -> Result<i32, ParseError> {
        if !self.eat('^') {
            return Ok(1);
        }
        let neg = self.eat('-');
        match self.peek().clone() {
            Tok::Int(v) if v <= i32::MAX as i64 => {
                self.bump();
                Ok(if neg { -(v as i32) } else { v as i32 })
            }
            t => self.err(format!(
                "expected an exponent, found {}",
                Self::describe(&t)
            )),
        }
    }

    fn factor(&mut self) -> Result<Factor, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                let mut den = 1;
                if self.eat('/') {
                    match self.peek().clone() {
                        Tok::Int(d) if d != 0 => {
                            self.bump();
                            den = d;
                        }
                        t => {
                            return self.err(format!(
                                "expected a denominator, found {}",
                                Self::describe(&t)
                            ))
                        }
                    }
                }
                Ok(Factor::Scalar(Coefficient::new(
                    Rational64::new(n, den),
                    0,
                    0,
                    0,
                )))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Factor::Node(e))
            }
            Tok::Ident(name) => {
                let next = self.peek_at(1).clone();
                match (name.as_str(), next) {
                    ("hbar", _) => {
                        self.bump();
                        let p = self.unit_power()?;
                        Ok(Factor::Scalar(Coefficient::new(
                            Rational64::from(1),
                            p,
                            0,
                            0,
                        )))
                    }
                    ("eps0", _) => {
                        self.bump();
                        let p = self.unit_power()?;
                        Ok(Factor::Scalar(Coefficient::new(
                            Rational64::from(1),
                            0,
                            p,
                            0,
                        )))
                    }
                    ("I", _) => {
                        self.bump();
                        let p = self.unit_power()?;
                        Ok(Factor::Scalar(Coefficient::new(
                            Rational64::from(1),
                            0,
                            0,
                            p,
                        )))
                    }
                    ("comm", Tok::Sym('(')) => {
                        self.bump();
                        self.bump();
                        let a = self.expr()?;
                        self.expect(',')?;
                        let b = self.expr()?;
                        self.expect(')')?;
                        Ok(Factor::Node(Surface::comm(a, b)))
                    }
                    ("int", Tok::Sym('(')) => {
                        self.bump();
                        let p = self.paren_point()?;
                        self.expect('(')?;
                        let body = self.expr()?;
                        self.expect(')')?;
                        if !body.mentions_point(&p.0) {
                            return Err(ParseError {
                                offset: start,
                                kind: ParseErrorKind::Unbound(p.0),
                            });
                        }
                        Ok(Factor::Node(Surface::Integral(p, Box::new(body))))
                    }
                    ("sum", Tok::Sym('[')) => {
                        self.bump();
                        let ix = self.index_list("sum", 1)?.remove(0);
                        self.expect('(')?;
                        let body = self.expr()?;
                        self.expect(')')?;
                        if let Index::Named(n) = &ix {
                            if !body.mentions_index(n) {
                                return Err(ParseError {
                                    offset: start,
                                    kind: ParseErrorKind::Unbound(n.clone()),
                                });
                            }
                        }
                        Ok(Factor::Node(Surface::SumOver(ix, Box::new(body))))
                    }
                    ("eps", Tok::Sym('[')) => {
                        self.bump();
                        let v = self.index_list("eps", 3)?;
                        Ok(Factor::Node(Surface::Atom(Atom::Epsilon([
                            v[0].clone(),
                            v[1].clone(),
                            v[2].clone(),
                        ]))))
                    }
                    ("delta", Tok::Sym('[')) => {
                        self.bump();
                        let v = self.index_list("delta", 2)?;
                        Ok(Factor::Node(Surface::Atom(Atom::Kronecker([
                            v[0].clone(),
                            v[1].clone(),
                        ]))))
                    }
                    ("E" | "B", Tok::Sym('[')) => {
                        self.bump();
                        let kind = if name == "E" {
                            FieldKind::E
                        } else {
                            FieldKind::B
                        };
                        let ix = self
                            .index_list(if name == "E" { "E" } else { "B" }, 1)?
                            .remove(0);
                        let p = self.paren_point()?;
                        let mut derivs = Vec::new();
                        for (dp, d, at) in self.derivs()? {
                            if dp != p {
                                return Err(ParseError {
                                    offset: at,
                                    kind: ParseErrorKind::Lexical(format!(
                                        "field at `{p}` differentiated at `{dp}`"
                                    )),
                                });
                            }
                            derivs.push(d);
                        }
                        Ok(Factor::Node(Surface::Field(
                            FieldOp::new(kind, ix, p).with_derivs(derivs),
                        )))
                    }
                    ("x", Tok::Sym('[')) => {
                        self.bump();
                        let ix = self.index_list("x", 1)?.remove(0);
                        let p = self.paren_point()?;
                        Ok(Factor::Node(Surface::Atom(Atom::Coord {
                            point: p,
                            index: ix,
                        })))
                    }
                    ("ddelta", Tok::Sym('(')) => {
                        self.bump();
                        self.bump();
                        let from = self.point()?;
                        self.expect(',')?;
                        let to = self.point()?;
                        self.expect(')')?;
                        let mut sign = 1;
                        let mut derivs = Vec::new();
                        for (dp, d, at) in self.derivs()? {
                            if dp == to && dp != from {
                                sign = -sign;
                            } else if dp != from {
                                return Err(ParseError {
                                    offset: at,
                                    kind: ParseErrorKind::Lexical(format!(
                                        "delta in `{from}`, `{to}` differentiated at `{dp}`"
                                    )),
                                });
                            }
                            derivs.push(d);
                        }
                        derivs.sort();
                        let node = Surface::Atom(Atom::Delta { from, to, derivs });
                        Ok(Factor::Node(if sign < 0 {
                            Surface::neg(node)
                        } else {
                            node
                        }))
                    }
                    ("P" | "J", Tok::Sym('[')) => {
                        self.bump();
                        let ix = self
                            .index_list(if name == "P" { "P" } else { "J" }, 1)?
                            .remove(0);
                        Ok(Factor::Node(if name == "P" {
                            Surface::Momentum(ix)
                        } else {
                            Surface::AngularMomentum(ix)
                        }))
                    }
                    _ => self.err(format!("unknown factor `{name}`")),
                }
            }
            t => self.err(format!("expected a factor, found {}", Self::describe(&t))),
        }
    }
}

enum Factor {
    Scalar(Coefficient),
    Node(Surface),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_of_products() {
        let s = parse("comm(E[i](x)*B[m](x), E[j](y)*B[n](y))").unwrap();
        match &s {
            Surface::Comm(a, b) => {
                assert!(matches!(&**a, Surface::Product(v) if v.len() == 2));
                assert!(matches!(&**b, Surface::Product(v) if v.len() == 2));
            }
            other => panic!("{other:?}"),
        }
        let (idx, pts) = s.names();
        assert_eq!(idx.into_iter().collect::<Vec<_>>(), ["i", "j", "m", "n"]);
        assert_eq!(pts.into_iter().collect::<Vec<_>>(), ["x", "y"]);
    }

    #[test]
    fn truncated_epsilon_reports_end_offset() {
        let text = "eps[i,k,l";
        let e = parse(text).unwrap_err();
        assert_eq!(e.offset, text.len());
        assert!(matches!(e.kind, ParseErrorKind::Lexical(_)));
    }

    #[test]
    fn epsilon_arity() {
        let e = parse("eps[i,k]").unwrap_err();
        assert_eq!(e.offset, 3);
        assert_eq!(
            e.kind,
            ParseErrorKind::Arity {
                name: "eps",
                expected: 3,
                found: 2
            }
        );
        assert!(parse("delta[i,j,k]").is_err());
    }

    #[test]
    fn integral_with_summed_index() {
        let s = parse("int(x)(x[n](x)*E[i](x)*B[n](x))").unwrap();
        match s {
            Surface::Integral(p, body) => {
                assert_eq!(p, Point::new("x"));
                assert!(matches!(*body, Surface::Product(ref v) if v.len() == 3));
            }
            other => panic!("{other:?}"),
        }
        let e = super::super::lower(&parse("int(x)(x[n](x)*E[i](x)*B[n](x))").unwrap()).unwrap();
        assert_eq!(e.free_indices.iter().collect::<Vec<_>>(), ["i"]);
        assert!(e.free_points.is_empty());
    }

    #[test]
    fn scalars_and_units() {
        let s = parse("-I*hbar*eps0^-1*1/2*E[1](x)").unwrap();
        let e = super::super::lower(&s).unwrap();
        assert_eq!(
            e.terms[0].coeff,
            Coefficient::new(Rational64::new(-1, 2), 1, -1, 1)
        );
    }

    #[test]
    fn derivative_on_second_delta_point_flips_sign() {
        let a = super::super::lower(&parse("ddelta(x,y)d[y,k]").unwrap()).unwrap();
        let b = super::super::lower(&parse("-ddelta(x,y)d[x,k]").unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unused_binder() {
        let e = parse("int(y)(E[i](x))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Unbound("y".into()));
        assert_eq!(e.offset, 0);
    }

    #[test]
    fn bad_character() {
        let e = parse("E[i](x) % 2").unwrap_err();
        assert_eq!(e.offset, 8);
    }
}
