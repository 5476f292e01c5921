//! Rational closed forms `num/den` of formal power series.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::indet::{ExpVec, IndetId};
use super::poly::{Poly, Rational};
use super::CasError;

/// A power series given as `num / den`, where `den` has a nonzero constant
/// term once every program, meta and placeholder indeterminate is set to 0.
///
/// Fractions are not reduced to lowest terms. Both parts are divided by the
/// rational gcd of all their coefficients and the first term of `den` (in
/// printing order) is made positive. Equality is decided by
/// cross-multiplication, see [`ClosedForm::cf_equal`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ClosedForm {
    num: Poly,
    den: Poly,
}

/// Result of evaluating a closed form at a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projection {
    Finite(ClosedForm),
    /// The denominator vanishes at the point while the numerator does not.
    Divergent,
}

fn invertible(den: &Poly) -> bool {
    !den.state_constant().is_zero()
}

/// Positive rational gcd of every coefficient of both polynomials.
fn joint_content(a: &Poly, b: &Poly) -> Rational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (_, c) in a.terms().chain(b.terms()) {
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    if num.is_zero() {
        Rational::one()
    } else {
        BigRational::new(num, den)
    }
}

/// Coefficients of a closed form in one indeterminate: the `i`-th is
/// `nums[i] / base` when `graded` is false and `nums[i] / base^(i+1)`
/// otherwise.
struct Expansion {
    nums: Vec<Poly>,
    base: Poly,
    graded: bool,
}

impl ClosedForm {
    /// Builds `num/den`, rejecting denominators that are not invertible.
    pub fn new(num: Poly, den: Poly) -> Result<Self, CasError> {
        if den.is_zero() {
            return Err(CasError::DivisionByZeroFps);
        }
        if !invertible(&den) {
            return Err(CasError::NonInvertibleDenominator(den.to_string()));
        }
        Ok(Self::from_parts(num, den))
    }

    /// Normalising constructor for denominators already known to be
    /// invertible.
    pub(crate) fn from_parts(num: Poly, den: Poly) -> Self {
        debug_assert!(invertible(&den), "non-invertible denominator {den}");
        if num.is_zero() {
            return Self::zero();
        }
        if num == den {
            return Self::one();
        }
        if let Some(c) = den.as_constant() {
            return Self { num: num.scale(&c.recip()), den: Poly::one() };
        }
        let mut k = joint_content(&num, &den).recip();
        if den.first_is_negative() {
            k = -k;
        }
        if k.is_one() {
            Self { num, den }
        } else {
            Self { num: num.scale(&k), den: den.scale(&k) }
        }
    }

    pub fn zero() -> Self {
        Self { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Self { num: Poly::one(), den: Poly::one() }
    }

    pub fn constant(c: Rational) -> Self {
        Self { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn poly(p: Poly) -> Self {
        Self { num: p, den: Poly::one() }
    }

    pub fn var(x: &IndetId) -> Self {
        Self::poly(Poly::var(x))
    }

    pub fn monomial(m: ExpVec) -> Self {
        Self::poly(Poly::monomial(m, Rational::one()))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_poly(&self) -> Option<Poly> {
        let c = self.den.as_constant()?;
        Some(self.num.scale(&c.recip()))
    }

    pub fn as_constant(&self) -> Option<Rational> {
        self.as_poly()?.as_constant()
    }

    pub fn indets(&self) -> BTreeSet<IndetId> {
        let mut s = self.num.indets();
        s.extend(self.den.indets());
        s
    }

    /// Semantic equality of the denoted series: `f.num * g.den == g.num * f.den`.
    pub fn cf_equal(&self, other: &ClosedForm) -> bool {
        if self == other {
            return true;
        }
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }

    pub fn add(&self, other: &ClosedForm) -> ClosedForm {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Self::from_parts(&self.num + &other.num, self.den.clone());
        }
        if let Some(r) = try_divide(&self.den, &other.den) {
            return Self::from_parts(&self.num + &(&other.num * &r), self.den.clone());
        }
        if let Some(r) = try_divide(&other.den, &self.den) {
            return Self::from_parts(&(&self.num * &r) + &other.num, other.den.clone());
        }
        Self::from_parts(
            &(&self.num * &other.den) + &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn neg(&self) -> ClosedForm {
        Self { num: -&self.num, den: self.den.clone() }
    }

    pub fn sub(&self, other: &ClosedForm) -> ClosedForm {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ClosedForm) -> ClosedForm {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.num == other.den {
            return Self::from_parts(other.num.clone(), self.den.clone());
        }
        if other.num == self.den {
            return Self::from_parts(self.num.clone(), other.den.clone());
        }
        Self::from_parts(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn div(&self, other: &ClosedForm) -> Result<ClosedForm, CasError> {
        if other.is_zero() {
            return Err(CasError::DivisionByZeroFps);
        }
        Self::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn scale(&self, c: &Rational) -> ClosedForm {
        Self::from_parts(self.num.scale(c), self.den.clone())
    }

    pub fn mul_poly(&self, p: &Poly) -> ClosedForm {
        Self::from_parts(&self.num * p, self.den.clone())
    }

    pub fn mul_monomial(&self, m: &ExpVec) -> ClosedForm {
        Self { num: self.num.mul_monomial(m), den: self.den.clone() }
    }

    pub fn pow(&self, e: u32) -> ClosedForm {
        Self::from_parts(self.num.pow(e), self.den.pow(e))
    }

    /// Formal partial derivative by the quotient rule.
    pub fn derivative(&self, x: &IndetId) -> ClosedForm {
        let dn = self.num.derivative(x);
        let dd = self.den.derivative(x);
        if dd.is_zero() {
            return Self::from_parts(dn, self.den.clone());
        }
        Self::from_parts(&(&dn * &self.den) - &(&self.num * &dd), self.den.pow(2))
    }

    /// The series substitution `f[x / g]`.
    pub fn subst(&self, x: &IndetId, g: &ClosedForm) -> Result<ClosedForm, CasError> {
        if g.den.is_one() {
            return Self::new(self.num.subst(x, &g.num), self.den.subst(x, &g.num));
        }
        // clear the inner denominator: p(a/b) * b^D with D the common degree
        let d = self.num.degree_in(x).max(self.den.degree_in(x)) as usize;
        let mut a_pows = vec![Poly::one()];
        let mut b_pows = vec![Poly::one()];
        for i in 1..=d {
            a_pows.push(&a_pows[i - 1] * &g.num);
            b_pows.push(&b_pows[i - 1] * &g.den);
        }
        let clear = |p: &Poly| {
            let mut out = Poly::zero();
            for (i, c) in p.coefficients_in(x).iter().enumerate() {
                if !c.is_zero() {
                    out = &out + &(&(c * &a_pows[i]) * &b_pows[d - i]);
                }
            }
            out
        };
        Self::new(clear(&self.num), clear(&self.den))
    }

    /// Renames one indeterminate.
    pub fn rename(&self, from: &IndetId, to: &IndetId) -> ClosedForm {
        let f = |y: &IndetId| if y == from { to.clone() } else { y.clone() };
        Self::from_parts(self.num.map_indets(f), self.den.map_indets(f))
    }

    /// `f[x/0]`. Always well defined.
    pub fn eval_zero(&self, x: &IndetId) -> ClosedForm {
        Self::from_parts(self.num.eval(x, &Rational::zero()), self.den.eval(x, &Rational::zero()))
    }

    /// `f[x/c]`, cancelling common factors `(x - c)` first.
    pub fn eval_at(&self, x: &IndetId, c: &Rational) -> Projection {
        if self.is_zero() {
            return Projection::Finite(Self::zero());
        }
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        loop {
            let n1 = num.eval(x, c);
            let d1 = den.eval(x, c);
            if !d1.is_zero() {
                if !invertible(&d1) {
                    return Projection::Divergent;
                }
                return Projection::Finite(Self::from_parts(n1, d1));
            }
            if !n1.is_zero() {
                return Projection::Divergent;
            }
            num = num.div_x_minus(x, c).expect("numerator vanishes at the point");
            den = den.div_x_minus(x, c).expect("denominator vanishes at the point");
        }
    }

    /// `f[x/1]`, failing when the projection diverges.
    pub fn eval_one(&self, x: &IndetId) -> Result<ClosedForm, CasError> {
        match self.eval_at(x, &Rational::one()) {
            Projection::Finite(f) => Ok(f),
            Projection::Divergent => Err(CasError::IllDefinedProjection {
                indet: x.to_string(),
                value: "1".into(),
            }),
        }
    }

    /// `f * x^-1`, defined when `f[x/0] = 0`.
    pub fn shift_down(&self, x: &IndetId) -> Result<ClosedForm, CasError> {
        if !self.num.eval(x, &Rational::zero()).is_zero() {
            return Err(CasError::ShiftPrecondition(x.to_string()));
        }
        let num = self.num.shift_down(x, 1).expect("numerator divisible by the indeterminate");
        Ok(Self::from_parts(num, self.den.clone()))
    }

    fn expansion(&self, x: &IndetId, n: usize) -> Expansion {
        let p = self.num.coefficients_in(x);
        let p_at = |i: usize| p.get(i).cloned().unwrap_or_else(Poly::zero);
        if self.den.degree_in(x) == 0 {
            return Expansion { nums: (0..=n).map(p_at).collect(), base: self.den.clone(), graded: false };
        }
        let q0 = self.den.eval(x, &Rational::zero());
        if let Some(r) = self.den.div_exact(&q0) {
            // r has constant x-coefficient 1, so its reciprocal has
            // polynomial coefficients
            let rc = r.coefficients_in(x);
            let mut f: Vec<Poly> = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let mut fi = p_at(i);
                for j in 1..rc.len().min(i + 1) {
                    if !rc[j].is_zero() {
                        fi = &fi - &(&rc[j] * &f[i - j]);
                    }
                }
                f.push(fi);
            }
            return Expansion { nums: f, base: q0, graded: false };
        }
        let q = self.den.coefficients_in(x);
        let mut q0_pows = vec![Poly::one()];
        for i in 1..=n {
            q0_pows.push(&q0_pows[i - 1] * &q0);
        }
        let mut big_n: Vec<Poly> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut ni = &p_at(i) * &q0_pows[i];
            for j in 1..q.len().min(i + 1) {
                if !q[j].is_zero() {
                    ni = &ni - &(&(&q[j] * &big_n[i - j]) * &q0_pows[j - 1]);
                }
            }
            big_n.push(ni);
        }
        Expansion { nums: big_n, base: q0, graded: true }
    }

    /// Coefficients of `x^0 ..= x^n`, each a closed form in the remaining
    /// indeterminates.
    pub fn coefficients(&self, x: &IndetId, n: usize) -> Vec<ClosedForm> {
        if self.is_zero() {
            return vec![Self::zero(); n + 1];
        }
        let e = self.expansion(x, n);
        if !e.graded {
            return e.nums.into_iter().map(|c| Self::from_parts(c, e.base.clone())).collect();
        }
        let mut pow = e.base.clone();
        let mut out = Vec::with_capacity(n + 1);
        for c in e.nums {
            out.push(Self::from_parts(c, pow.clone()));
            pow = &pow * &e.base;
        }
        out
    }

    /// Coefficient of `x^i`.
    pub fn coeff(&self, x: &IndetId, i: usize) -> ClosedForm {
        self.coefficients(x, i).pop().expect("nonempty")
    }

    /// The part of the series whose exponent of `x` is below `n`.
    pub fn truncate_below(&self, x: &IndetId, n: u32) -> ClosedForm {
        if n == 0 || self.is_zero() {
            return Self::zero();
        }
        let n = n as usize;
        let e = self.expansion(x, n - 1);
        if !e.graded {
            return Self::from_parts(Poly::from_coefficients_in(x, &e.nums), e.base);
        }
        let mut pows = vec![Poly::one()];
        for i in 1..n {
            pows.push(&pows[i - 1] * &e.base);
        }
        let terms: Vec<Poly> = e.nums.iter().enumerate().map(|(i, c)| c * &pows[n - 1 - i]).collect();
        Self::from_parts(Poly::from_coefficients_in(x, &terms), &pows[n - 1] * &e.base)
    }

    /// Truncated expansion as `(monomial, coefficient)` pairs, bounding the
    /// exponent of every listed indeterminate.
    pub fn taylor_terms(&self, upto: &[(IndetId, u32)]) -> Vec<(ExpVec, ClosedForm)> {
        let mut out = Vec::new();
        self.taylor_rec(upto, ExpVec::one(), &mut out);
        out
    }

    fn taylor_rec(&self, upto: &[(IndetId, u32)], prefix: ExpVec, out: &mut Vec<(ExpVec, ClosedForm)>) {
        if self.is_zero() {
            return;
        }
        match upto.split_first() {
            None => out.push((prefix, self.clone())),
            Some(((x, d), rest)) => {
                for (i, c) in self.coefficients(x, *d as usize).into_iter().enumerate() {
                    c.taylor_rec(rest, prefix.mul(&ExpVec::var(x, i as u32)), out);
                }
            }
        }
    }

    /// Truncated expansion as a polynomial. Every coefficient left after
    /// extracting the listed indeterminates must be polynomial.
    pub fn taylor(&self, upto: &[(IndetId, u32)]) -> Result<Poly, CasError> {
        let mut out = Poly::zero();
        for (m, c) in self.taylor_terms(upto) {
            let p = c.as_poly().ok_or_else(|| CasError::NonPolynomialCoefficient(c.to_string()))?;
            out = &out + &p.mul_monomial(&m);
        }
        Ok(out)
    }
}

/// `a / b` when `b` divides `a` exactly; skips the attempt when degrees rule
/// it out.
fn try_divide(a: &Poly, b: &Poly) -> Option<Poly> {
    if b.as_constant().is_some() || b.len() > a.len() || b.total_degree() > a.total_degree() {
        return None;
    }
    if b.indets().iter().any(|x| b.degree_in(x) > a.degree_in(x)) {
        return None;
    }
    a.div_exact(b)
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            // `*` and `/` associate to the left, so a single-term numerator
            // needs no parentheses
            if self.num.len() == 1 {
                write!(f, "{}/({})", self.num, self.den)
            } else {
                write!(f, "({})/({})", self.num, self.den)
            }
        }
    }
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::poly::{int, rat};

    fn x() -> IndetId {
        IndetId::program("x")
    }
    fn y() -> IndetId {
        IndetId::program("y")
    }
    fn px() -> Poly {
        Poly::var(&x())
    }
    fn py() -> Poly {
        Poly::var(&y())
    }
    fn c(n: i64, d: i64) -> Poly {
        Poly::constant(rat(n, d))
    }
    fn cf(num: Poly, den: Poly) -> ClosedForm {
        ClosedForm::new(num, den).unwrap()
    }
    /// 1/(1 - XY)
    fn geo_xy() -> ClosedForm {
        cf(Poly::one(), &Poly::one() - &(&px() * &py()))
    }

    #[test]
    fn doubling() {
        let f = cf(Poly::one(), &c(2, 1) - &px());
        assert!(f.add(&f).cf_equal(&cf(c(2, 1), &c(2, 1) - &px())));
    }

    #[test]
    fn product_and_sum_of_geometric_forms() {
        let g = geo_xy();
        let sq = g.mul(&g);
        let one_m = &Poly::one() - &(&px() * &py());
        assert!(sq.cf_equal(&cf(Poly::one(), one_m.pow(2))));
        let s = g.add(&sq);
        assert!(s.cf_equal(&cf(&c(2, 1) - &(&px() * &py()), one_m.pow(2))));
        // exact division keeps the larger denominator
        assert_eq!(s.den(), &one_m.pow(2));
    }

    #[test]
    fn equality_by_cross_multiplication() {
        let f = cf(&Poly::one() - &px().pow(2), &(&Poly::one() - &px()) * &(&Poly::one() + &px()));
        assert!(f.cf_equal(&ClosedForm::one()));
        let a = cf(Poly::one(), &c(2, 1) - &px());
        let b = cf(Poly::one(), &c(2, 1) - &px().scale(&int(2)));
        assert!(!a.cf_equal(&b));
    }

    #[test]
    fn derivative_of_geometric() {
        let d = geo_xy().derivative(&x());
        let one_m = &Poly::one() - &(&px() * &py());
        assert!(d.cf_equal(&cf(py(), one_m.pow(2))));
        assert!(ClosedForm::constant(int(3)).derivative(&x()).is_zero());
        assert_eq!(ClosedForm::poly(px().pow(2)).derivative(&x()).to_string(), "2*X");
    }

    #[test]
    fn substitution() {
        let f = cf(Poly::one(), &Poly::one() - &px());
        let g = f.subst(&x(), &ClosedForm::poly(px().pow(2))).unwrap();
        assert!(g.cf_equal(&cf(Poly::one(), &Poly::one() - &px().pow(2))));
        assert_eq!(f.subst(&x(), &ClosedForm::var(&x())).unwrap(), f);
        // sum of y-many bernoulli(1/2) samples
        let h = ClosedForm::poly(Poly::from_terms([
            (ExpVec::one(), rat(1, 5)),
            (ExpVec::var(&y(), 1), rat(3, 10)),
            (ExpVec::var(&y(), 2), rat(1, 2)),
        ]));
        let b = &c(1, 2) + &px().scale(&rat(1, 2));
        let out = h.subst(&y(), &ClosedForm::poly(&py() * &b)).unwrap();
        let want = &(&c(1, 5) + &(&py() * &b).scale(&rat(3, 10))) + &(&py().pow(2) * &b.pow(2)).scale(&rat(1, 2));
        assert!(out.cf_equal(&ClosedForm::poly(want)));
    }

    #[test]
    fn substitution_of_fraction() {
        // 1/(1-Y) with Y -> Y/(2-X)
        let f = cf(Poly::one(), &Poly::one() - &py());
        let g = cf(py(), &c(2, 1) - &px());
        let h = f.subst(&y(), &g).unwrap();
        assert!(h.cf_equal(&cf(&c(2, 1) - &px(), &(&c(2, 1) - &px()) - &py())));
    }

    #[test]
    fn projections() {
        assert!(geo_xy().eval_zero(&x()).cf_equal(&ClosedForm::one()));
        assert!(geo_xy().eval_one(&x()).unwrap().cf_equal(&cf(Poly::one(), &Poly::one() - &py())));
        // 3/(2XY - 5X - 4Y + 10) at X = 1 is 0.6/(1 - 0.4Y)
        let den = Poly::from_terms([
            (ExpVec::from_pairs([(x(), 1), (y(), 1)]), int(2)),
            (ExpVec::var(&x(), 1), int(-5)),
            (ExpVec::var(&y(), 1), int(-4)),
            (ExpVec::one(), int(10)),
        ]);
        let f = cf(c(3, 1), den);
        let m = f.eval_one(&x()).unwrap();
        assert!(m.cf_equal(&cf(c(3, 5), &Poly::one() - &py().scale(&rat(2, 5)))));
    }

    #[test]
    fn projection_cancels_and_detects_divergence() {
        // (1 - X^2)/(1 - X) at 1 -> 2
        let f = ClosedForm { num: &Poly::one() - &px().pow(2), den: &Poly::one() - &px() };
        assert_eq!(f.eval_at(&x(), &Rational::one()), Projection::Finite(ClosedForm::constant(int(2))));
        let g = cf(Poly::one(), &Poly::one() - &px());
        assert_eq!(g.eval_at(&x(), &Rational::one()), Projection::Divergent);
        assert!(g.eval_one(&x()).is_err());
    }

    #[test]
    fn shifting() {
        let f = ClosedForm::poly(&px() + &px().pow(2));
        assert_eq!(f.shift_down(&x()).unwrap().to_string(), "1 + X");
        let g = cf(px(), &Poly::one() - &(&px() * &py()));
        assert!(g.shift_down(&x()).unwrap().cf_equal(&geo_xy()));
        assert!(geo_xy().shift_down(&x()).is_err());
    }

    #[test]
    fn coefficients_of_series() {
        let f = cf(Poly::one(), &c(2, 1) - &px());
        assert_eq!(f.coeff(&x(), 2).as_constant(), Some(rat(1, 8)));
        assert!(ClosedForm::poly(px().pow(5)).coeff(&x(), 0).is_zero());
        let cube = ClosedForm::poly((&c(1, 2) + &px().scale(&rat(1, 2))).pow(3));
        assert_eq!(cube.coeff(&x(), 3).as_constant(), Some(rat(1, 8)));
    }

    #[test]
    fn truncated_expansions() {
        let f = cf(Poly::one(), &c(2, 1) - &px());
        assert_eq!(f.taylor(&[(x(), 3)]).unwrap().to_string(), "1/2 + 1/4*X + 1/8*X^2 + 1/16*X^3");
        let k = ClosedForm::constant(rat(3, 7));
        assert_eq!(k.taylor(&[(x(), 4)]).unwrap().to_string(), "3/7");
        let u = IndetId::meta("x");
        let g = cf(Poly::one(), &Poly::one() - &(&px() * &Poly::var(&u)));
        assert_eq!(g.taylor(&[(x(), 2), (u.clone(), 2)]).unwrap().to_string(), "1 + X*U_X + X^2*U_X^2");
    }

    #[test]
    fn truncation_below_matches_coefficients() {
        // den not divisible by its own x-free part takes the graded path
        let den = &(&c(2, 1) - &px()) - &py();
        let f = cf(Poly::one(), den);
        let t = f.truncate_below(&x(), 3);
        let direct = f.taylor(&[(x(), 2), (y(), 4)]).unwrap();
        assert_eq!(t.taylor(&[(x(), 5), (y(), 4)]).unwrap(), direct);
    }

    #[test]
    fn invalid_denominators() {
        assert_eq!(ClosedForm::new(Poly::one(), Poly::zero()), Err(CasError::DivisionByZeroFps));
        assert!(matches!(ClosedForm::new(Poly::one(), px()), Err(CasError::NonInvertibleDenominator(_))));
        let a = IndetId::param("a");
        assert!(ClosedForm::new(Poly::one(), &Poly::var(&a) - &px()).is_ok());
        assert!(ClosedForm::one().div(&ClosedForm::zero()).is_err());
    }
}
