//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::indet::{ExpVec, IndetId};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// A polynomial stored as a map from exponent vectors to nonzero
/// coefficients. Iteration follows the canonical graded order.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<ExpVec, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(ExpVec::one(), c);
        p
    }

    pub fn var(x: &IndetId) -> Self {
        Self::monomial(ExpVec::var(x, 1), Rational::one())
    }

    pub fn var_pow(x: &IndetId, e: u32) -> Self {
        Self::monomial(ExpVec::var(x, e), Rational::one())
    }

    pub fn monomial(m: ExpVec, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (ExpVec, Rational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c * m` in place.
    pub fn add_term(&mut self, m: ExpVec, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_coeff().is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&ExpVec::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_coeff(&self) -> Rational {
        self.terms.get(&ExpVec::one()).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeff(&self, m: &ExpVec) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&ExpVec, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Greatest term in the canonical monomial order.
    pub fn leading(&self) -> Option<(&ExpVec, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, x: &IndetId) -> u32 {
        self.terms.keys().map(|m| m.exp(x)).max().unwrap_or(0)
    }

    /// Lowest exponent of `x` over all terms (0 for the zero polynomial).
    pub fn ord_in(&self, x: &IndetId) -> u32 {
        self.terms.keys().map(|m| m.exp(x)).min().unwrap_or(0)
    }

    pub fn indets(&self) -> BTreeSet<IndetId> {
        self.terms
            .keys()
            .flat_map(|m| m.iter().map(|(x, _)| x.clone()))
            .collect()
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &ExpVec) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, a)| (k.mul(m), a.clone())).collect() }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Univariate view: coefficients of `x^0, x^1, ...` as polynomials in
    /// the remaining indeterminates.
    pub fn coefficients_in(&self, x: &IndetId) -> Vec<Poly> {
        let d = self.degree_in(x) as usize;
        let mut out = vec![Poly::zero(); if self.is_zero() { 0 } else { d + 1 }];
        for (m, c) in &self.terms {
            let e = m.exp(x) as usize;
            out[e].add_term(m.without(x), c.clone());
        }
        out
    }

    pub fn from_coefficients_in(x: &IndetId, coeffs: &[Poly]) -> Poly {
        let mut out = Poly::zero();
        for (i, c) in coeffs.iter().enumerate() {
            let xi = ExpVec::var(x, i as u32);
            for (m, a) in &c.terms {
                out.add_term(m.mul(&xi), a.clone());
            }
        }
        out
    }

    /// Coefficient of `x^i` as a polynomial in the other indeterminates.
    pub fn coeff_in(&self, x: &IndetId, i: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.exp(x) == i {
                out.add_term(m.without(x), c.clone());
            }
        }
        out
    }

    /// Substitutes a polynomial for one indeterminate.
    pub fn subst(&self, x: &IndetId, v: &Poly) -> Poly {
        let coeffs = self.coefficients_in(x);
        // Horner
        let mut acc = Poly::zero();
        for c in coeffs.iter().rev() {
            acc = &(&acc * v) + c;
        }
        acc
    }

    /// Substitutes a rational constant for one indeterminate.
    pub fn eval(&self, x: &IndetId, v: &Rational) -> Poly {
        let mut out = Poly::zero();
        let mut powers: HashMap<u32, Rational> = HashMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(x);
            if e == 0 {
                out.add_term(m.clone(), c.clone());
                continue;
            }
            let pw = powers.entry(e).or_insert_with(|| num_traits::pow(v.clone(), e as usize)).clone();
            out.add_term(m.without(x), c * pw);
        }
        out
    }

    /// Sets every indeterminate selected by `pred` to zero.
    pub fn zero_out<F: Fn(&IndetId) -> bool>(&self, pred: F) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.iter().all(|(x, _)| !pred(x)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Constant term with respect to program, meta and placeholder
    /// indeterminates; parameters stay symbolic.
    pub fn state_constant(&self) -> Poly {
        self.zero_out(|x| !x.is_param())
    }

    pub fn derivative(&self, x: &IndetId) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(x);
            if e > 0 {
                out.add_term(m.with_exp(x, e - 1), c * int(e as i64));
            }
        }
        out
    }

    /// Divides by `x^k`; every term must contain `x^k`.
    pub fn shift_down(&self, x: &IndetId, k: u32) -> Option<Poly> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(x);
            if e < k {
                return None;
            }
            out.add_term(m.with_exp(x, e - k), c.clone());
        }
        Some(out)
    }

    /// Exact multivariate division. Returns `None` when `d` does not divide
    /// `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (ld_m, ld_c) = d.leading()?;
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let ld_m = ld_m.clone();
        let ld_c = ld_c.clone();
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((rm, rc)) = r.leading() {
            let m = rm.div(&ld_m)?;
            let c = rc / &ld_c;
            r = &r - &d.mul_monomial(&m).scale(&c);
            q.add_term(m, c);
        }
        Some(q)
    }

    /// Divides by `(x - c)` exactly, or returns `None` if `self[x/c] != 0`.
    pub fn div_x_minus(&self, x: &IndetId, c: &Rational) -> Option<Poly> {
        let coeffs = self.coefficients_in(x);
        if coeffs.is_empty() {
            return Some(Poly::zero());
        }
        // synthetic division from the top coefficient down
        let n = coeffs.len();
        let mut q = vec![Poly::zero(); n - 1];
        let mut carry = Poly::zero();
        for i in (1..n).rev() {
            carry = &carry.scale(c) + &coeffs[i];
            q[i - 1] = carry.clone();
        }
        let rem = &carry.scale(c) + &coeffs[0];
        if !rem.is_zero() {
            return None;
        }
        Some(Poly::from_coefficients_in(x, &q))
    }

    /// Rational content: the positive rational `c` with `self / c` having
    /// coprime integer coefficients.
    pub fn content(&self) -> Rational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Rational::one();
        }
        BigRational::new(num, den)
    }

    /// Sign of the leading coefficient in the canonical order.
    pub fn leading_is_negative(&self) -> bool {
        self.leading().map(|(_, c)| c.is_negative()).unwrap_or(false)
    }

    /// Sign of the first coefficient in printing order.
    pub fn first_is_negative(&self) -> bool {
        self.terms.values().next().map(|c| c.is_negative()).unwrap_or(false)
    }

    /// Every coefficient is a nonnegative rational.
    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    /// Evaluates at a point given for every indeterminate present.
    pub fn eval_all<F: Fn(&IndetId) -> Option<Rational>>(&self, point: F) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, e) in m.iter() {
                t *= num_traits::pow(point(x)?, e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    pub fn map_indets<F: Fn(&IndetId) -> IndetId>(&self, f: F) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(ExpVec::from_pairs(m.iter().map(|(x, e)| (f(x), e))), c.clone());
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (big, small) = if self.terms.len() >= rhs.terms.len() { (self, rhs) } else { (rhs, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.as_constant() {
            return self.scale(&c);
        }
        let mut acc: HashMap<ExpVec, Rational> = HashMap::with_capacity(self.len() * rhs.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                *acc.entry(a.mul(b)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        Poly { terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

pub(crate) fn fmt_rational(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Canonical rendering: terms in graded order joined by ` + ` / ` - `,
/// coefficients as `n` or `n/d` followed by `*monomial`.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&a))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> IndetId {
        IndetId::program("x")
    }
    fn y() -> IndetId {
        IndetId::program("y")
    }

    #[test]
    fn product_of_conjugates() {
        let one = Poly::one();
        let px = Poly::var(&x());
        let p = &(&one + &px) * &(&one - &px);
        assert_eq!(p.to_string(), "1 - X^2");
    }

    #[test]
    fn square_of_half_sum() {
        let h = Poly::constant(rat(1, 2));
        let p = &h + &Poly::var(&x()).scale(&rat(1, 2));
        assert_eq!(p.pow(2).to_string(), "1/4 + 1/2*X + 1/4*X^2");
    }

    #[test]
    fn exact_division_roundtrip() {
        let a = &Poly::one() - &(&Poly::var(&x()) * &Poly::var(&y()));
        let b = &(&Poly::var(&x()) + &Poly::constant(int(3))) * &Poly::var(&y());
        let p = &a * &b;
        assert_eq!(p.div_exact(&a), Some(b.clone()));
        assert_eq!(p.div_exact(&b), Some(a.clone()));
        let q = &p + &Poly::one();
        assert_eq!(q.div_exact(&a), None);
    }

    #[test]
    fn linear_factor_division() {
        // X^3 - 1 = (X - 1)(X^2 + X + 1)
        let p = &Poly::var_pow(&x(), 3) - &Poly::one();
        let q = p.div_x_minus(&x(), &int(1)).unwrap();
        assert_eq!(q.to_string(), "1 + X + X^2");
        assert!(Poly::var(&x()).div_x_minus(&x(), &int(1)).is_none());
        // X^2 - 4 = (X - 2)(X + 2)
        let r = &Poly::var_pow(&x(), 2) - &Poly::constant(int(4));
        assert_eq!(r.div_x_minus(&x(), &int(2)).unwrap().to_string(), "2 + X");
    }

    #[test]
    fn content_normalises() {
        let p = Poly::from_terms([(ExpVec::one(), rat(2, 3)), (ExpVec::var(&x(), 1), rat(4, 9))]);
        assert_eq!(p.content(), rat(2, 9));
    }

    #[test]
    fn subst_and_eval() {
        let p = &Poly::one() + &Poly::var(&x());
        let q = p.subst(&x(), &Poly::var_pow(&x(), 2));
        assert_eq!(q.to_string(), "1 + X^2");
        assert_eq!(q.eval(&x(), &int(2)).to_string(), "5");
    }
}
