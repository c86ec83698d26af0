//! Text form of rational functions.
//!
//! Grammar: `+ - * / ^`, parentheses, identifiers and integer literals.
//! Exponents are integer literals; a negative exponent is accepted only on a
//! bare variable. U+2212 is read as `-`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::poly::{Coeff, Poly};
use super::{RatFun, VarUniverse};
use crate::error::{Error, Result};

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let chars: Vec<char> = text.chars().map(|c| if c == '\u{2212}' { '-' } else { c }).collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Int(s.parse().expect("digits")), l0, c0));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            toks.push((Tok::Ident(chars[start..i].iter().collect()), l0, c0));
            continue;
        }
        if "+-*/^()".contains(c) {
            toks.push((Tok::Op(c), l0, c0));
            col += 1;
            i += 1;
            continue;
        }
        return Err(Error::Syntax { line: l0, column: c0, message: format!("unexpected character `{c}`") });
    }
    toks.push((Tok::End, line, col));
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (_, line, column) = self.toks[self.pos];
        Err(Error::Syntax { line, column, message: message.into() })
    }

    fn eat(&mut self, op: char) -> bool {
        if *self.peek() == Tok::Op(op) {
            self.next();
            true
        } else {
            false
        }
    }
}

struct Parser<'a> {
    lx: Lexer,
    universe: &'a Arc<VarUniverse>,
}

impl Parser<'_> {
    fn expr(&mut self) -> Result<RatFun> {
        let mut acc = self.term()?;
        loop {
            if self.lx.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.lx.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RatFun> {
        let mut acc = self.unary()?;
        loop {
            if self.lx.eat('*') {
                acc = &acc * &self.unary()?;
            } else if *self.lx.peek() == Tok::Op('/') {
                self.lx.next();
                let rhs = self.unary()?;
                if rhs.is_zero() {
                    return self.lx.err("division by zero");
                }
                acc = &acc / &rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RatFun> {
        if self.lx.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.lx.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFun> {
        let bare_var = matches!(self.lx.peek(), Tok::Ident(_));
        let base = self.atom()?;
        if !self.lx.eat('^') {
            return Ok(base);
        }
        let negative = self.lx.eat('-');
        let e = match self.lx.next() {
            Tok::Int(k) => k,
            _ => {
                self.lx.pos -= 1;
                return self.lx.err("exponent must be an integer literal");
            }
        };
        let e: i32 = match i32::try_from(&e) {
            Ok(v) if v <= 4096 => v,
            _ => return self.lx.err("exponent too large"),
        };
        if negative && !bare_var {
            return self.lx.err("negative exponent on a non-variable base");
        }
        if *self.lx.peek() == Tok::Op('^') {
            return self.lx.err("chained exponent needs parentheses");
        }
        base.pow(if negative { -e } else { e })
    }

    fn atom(&mut self) -> Result<RatFun> {
        match self.lx.next() {
            Tok::Int(k) => Ok(RatFun::constant(self.universe, Coeff::from_integer(k))),
            Tok::Ident(name) => match self.universe.index_of(&name) {
                Some(i) => Ok(RatFun::var(self.universe, i)),
                None => {
                    self.lx.pos -= 1;
                    self.lx.err(format!("unknown variable `{name}`"))
                }
            },
            Tok::Op('(') => {
                let v = self.expr()?;
                if !self.lx.eat(')') {
                    return self.lx.err("expected `)`");
                }
                Ok(v)
            }
            Tok::End => self.lx.err("unexpected end of input"),
            Tok::Op(c) => {
                self.lx.pos -= 1;
                self.lx.err(format!("unexpected `{c}`"))
            }
        }
    }
}

pub fn parse(universe: &Arc<VarUniverse>, text: &str) -> Result<RatFun> {
    let lx = lex(text)?;
    let mut p = Parser { lx, universe };
    let v = p.expr()?;
    if *p.lx.peek() != Tok::End {
        return p.lx.err("trailing input");
    }
    Ok(v)
}

fn fmt_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Polynomial in descending graded-lex order, e.g. `3/2*a1^2*z - a2 + 1`.
pub fn print_poly(names: &[&str], p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (idx, (m, c)) in p.terms().iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        for (i, &e) in m.exps().iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(names[i].to_string()),
                _ => factors.push(format!("{}^{}", names[i], e)),
            }
        }
        if factors.is_empty() {
            out.push_str(&fmt_coeff(&a));
        } else {
            if !a.is_one() {
                out.push_str(&fmt_coeff(&a));
                out.push('*');
            }
            out.push_str(&factors.join("*"));
        }
    }
    out
}

pub fn print(f: &RatFun) -> String {
    let names: Vec<&str> = f.universe().variables().iter().map(|v| v.name.as_str()).collect();
    let num = print_poly(&names, f.numer());
    if f.denom().is_one() {
        return num;
    }
    format!("({})/({})", num, print_poly(&names, f.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Arc<VarUniverse> {
        VarUniverse::parameters(&["a1", "a2", "z"]).unwrap()
    }

    #[test]
    fn prints_in_grlex_order() {
        let u = u();
        let f = parse(&u, "1 - a2 + 3/2*z*a1^2").unwrap();
        assert_eq!(print(&f), "3/2*a1^2*z - a2 + 1");
        assert_eq!(print(&RatFun::zero(&u)), "0");
        assert_eq!(print(&parse(&u, "-a1").unwrap()), "-a1");
    }

    #[test]
    fn round_trips() {
        let u = u();
        for s in ["(a1 + 1)/(a1 - a2)", "z^-2", "-(z-a1)^3/(2*a2)", "a1/a2 - a2/a1", "7"] {
            let f = parse(&u, s).unwrap();
            assert_eq!(parse(&u, &print(&f)).unwrap(), f, "{s}");
        }
    }

    #[test]
    fn unicode_minus_and_unary_signs() {
        let u = u();
        assert_eq!(parse(&u, "a1 \u{2212} a2").unwrap(), parse(&u, "a1 - a2").unwrap());
        assert_eq!(parse(&u, "--a1").unwrap(), parse(&u, "a1").unwrap());
    }

    #[test]
    fn reports_positions() {
        let u = u();
        match parse(&u, "a1 +\n  b") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse(&u, "(a1+a2)^-1") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 11)),
            other => panic!("{other:?}"),
        }
        assert!(parse(&u, "a1 / 0").is_err());
        assert!(parse(&u, "(a1").is_err());
        assert!(parse(&u, "a1 $").is_err());
        assert!(parse(&u, "a1^2^3").is_err());
    }
}
