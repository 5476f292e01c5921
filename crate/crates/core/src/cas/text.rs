//! Reading closed forms and rationals back from their canonical text.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::closed_form::ClosedForm;
use super::indet::IndetId;
use super::poly::{fmt_rational, Rational};
use super::CasError;

pub fn render_rational(c: &Rational) -> String {
    fmt_rational(c)
}

/// Parses `n`, `-n`, `n/d` or a decimal such as `0.25` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r.trim_start()),
        None => (false, s),
    };
    let v = if let Some((n, d)) = body.split_once('/') {
        let n = parse_decimal(n.trim())?;
        let d = parse_decimal(d.trim())?;
        if d.is_zero() {
            return None;
        }
        n / d
    } else {
        parse_decimal(body)?
    };
    Some(if neg { -v } else { v })
}

fn parse_decimal(s: &str) -> Option<Rational> {
    if s.is_empty() {
        return None;
    }
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(BigRational::new(n, d))
}

/// Maps identifiers in closed-form text to indeterminates.
///
/// With a variable list, `C` (or `c`) names program variable `c`, `U_C` its
/// meta partner, declared parameters stand for themselves and `T` is the
/// placeholder unless some variable renders as `T`. Without one, any
/// all-uppercase name other than `T` is a program variable and anything else
/// a parameter.
#[derive(Clone, Debug, Default)]
pub struct Resolver {
    vars: Option<Vec<String>>,
    params: Vec<String>,
}

impl Resolver {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn new<S: AsRef<str>>(vars: &[S], params: &[S]) -> Self {
        Self {
            vars: Some(vars.iter().map(|s| s.as_ref().to_string()).collect()),
            params: params.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn resolve(&self, ident: &str) -> Option<IndetId> {
        if self.params.iter().any(|p| p == ident) {
            return Some(IndetId::param(ident));
        }
        let Some(vars) = &self.vars else {
            if ident == "T" {
                return Some(IndetId::placeholder());
            }
            if let Some(rest) = ident.strip_prefix("U_") {
                if is_upper(rest) {
                    return Some(IndetId::meta(&rest.to_lowercase()));
                }
            }
            if is_upper(ident) {
                return Some(IndetId::program(&ident.to_lowercase()));
            }
            return Some(IndetId::param(ident));
        };
        let by_upper = |u: &str| vars.iter().find(|v| v.to_uppercase() == u);
        if let Some(v) = vars.iter().find(|v| v.as_str() == ident) {
            return Some(IndetId::program(v));
        }
        if let Some(v) = by_upper(ident) {
            return Some(IndetId::program(v));
        }
        if let Some(rest) = ident.strip_prefix("U_") {
            if let Some(v) = by_upper(rest) {
                return Some(IndetId::meta(v));
            }
        }
        if ident == "T" {
            return Some(IndetId::placeholder());
        }
        None
    }
}

fn is_upper(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
        && s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Sym(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, CasError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = parse_decimal(&text)
                .ok_or_else(|| CasError::Parse { col: start + 1, msg: format!("bad number {text:?}") })?;
            out.push((start + 1, Tok::Num(v)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start + 1, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i + 1, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(CasError::Parse { col: i + 1, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    resolver: &'a Resolver,
    end_col: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end_col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, CasError> {
        Err(CasError::Parse { col: self.col(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ClosedForm, CasError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ClosedForm, CasError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                let col = self.col();
                let d = self.unary()?;
                acc = acc.div(&d).map_err(|e| CasError::Parse { col, msg: e.to_string() })?;
            } else if matches!(self.peek(), Some(Tok::Ident(_) | Tok::Num(_) | Tok::Sym('('))) {
                // juxtaposition
                acc = acc.mul(&self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<ClosedForm, CasError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ClosedForm, CasError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let col = self.col();
        let e = match self.peek() {
            Some(Tok::Num(n)) if n.is_integer() => n.to_integer(),
            _ => return self.err("expected an integer exponent"),
        };
        self.pos += 1;
        let e: u32 = e.try_into().map_err(|_| CasError::Parse { col, msg: "exponent too large".into() })?;
        let p = base.pow(e);
        if neg {
            ClosedForm::one().div(&p).map_err(|err| CasError::Parse { col, msg: err.to_string() })
        } else {
            Ok(p)
        }
    }

    fn primary(&mut self) -> Result<ClosedForm, CasError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(ClosedForm::constant(n))
            }
            Some(Tok::Ident(name)) => {
                let Some(x) = self.resolver.resolve(&name) else {
                    return self.err(format!("unknown indeterminate {name}"));
                };
                self.pos += 1;
                Ok(ClosedForm::var(&x))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(t) => self.err(format!("unexpected {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a rational-function expression, including the canonical rendering
/// `(num)/(den)`.
pub fn parse_closed_form(s: &str, resolver: &Resolver) -> Result<ClosedForm, CasError> {
    let toks = lex(s)?;
    let mut p = Parser { toks, pos: 0, resolver, end_col: s.chars().count() + 1 };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl std::str::FromStr for ClosedForm {
    type Err = CasError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_closed_form(s, &Resolver::free())
    }
}
