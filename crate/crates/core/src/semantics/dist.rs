//! Generating functions of the built-in distributions, in the placeholder
//! indeterminate `T`.

use num_traits::{One, Signed};

use super::SemanticsError;
use crate::cas::{ClosedForm, IndetId, Poly, Rational};
use crate::syntax::{Count, DistExpr, ProbExpr};

/// A probability expression as a closed form over parameters.
pub fn prob_cf(p: &ProbExpr) -> Result<ClosedForm, SemanticsError> {
    Ok(match p {
        ProbExpr::Lit(r) => ClosedForm::constant(r.clone()),
        ProbExpr::Param(a) => ClosedForm::var(&IndetId::param(a)),
        ProbExpr::Neg(a) => prob_cf(a)?.neg(),
        ProbExpr::Add(a, b) => prob_cf(a)?.add(&prob_cf(b)?),
        ProbExpr::Sub(a, b) => prob_cf(a)?.sub(&prob_cf(b)?),
        ProbExpr::Mul(a, b) => prob_cf(a)?.mul(&prob_cf(b)?),
        ProbExpr::Div(a, b) => {
            let d = prob_cf(b)?;
            prob_cf(a)?.div(&d).map_err(|_| SemanticsError::InvalidParameter(format!("{p}: division by {d}")))?
        }
    })
}

/// `p` as a closed form, checked to lie in `[0, 1]` when it is a number.
fn probability(p: &ProbExpr) -> Result<ClosedForm, SemanticsError> {
    let cf = prob_cf(p)?;
    if let Some(c) = cf.as_constant() {
        if c.is_negative() || c > Rational::one() {
            return Err(SemanticsError::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(cf)
}

fn literal_count(d: &DistExpr, n: &Count) -> Result<u32, SemanticsError> {
    match n {
        Count::Lit(k) => u32::try_from(*k).map_err(|_| SemanticsError::InvalidParameter(format!("{d}: count too large"))),
        Count::Var(_) => Err(SemanticsError::UnsupportedDistribution(format!("{d} has a variable count"))),
    }
}

/// `(T^a + ... + T^b) / (b - a + 1)`.
fn uniform(a: u64, b: u64) -> ClosedForm {
    let t = IndetId::placeholder();
    let w = Rational::from_integer((b - a + 1).into()).recip();
    let mut p = Poly::zero();
    for k in a..=b {
        p = &p + &Poly::var_pow(&t, k as u32).scale(&w);
    }
    ClosedForm::poly(p)
}

/// The PGF of `d` in `T`.
pub fn dist_pgf(d: &DistExpr) -> Result<ClosedForm, SemanticsError> {
    let t = ClosedForm::var(&IndetId::placeholder());
    let one = ClosedForm::one();
    Ok(match d {
        DistExpr::Dirac(n) => t.pow(*n as u32),
        DistExpr::Bernoulli(p) => {
            let p = probability(p)?;
            one.sub(&p).add(&p.mul(&t))
        }
        DistExpr::Uniform(0) => return Err(SemanticsError::InvalidParameter("unif(0) is empty".into())),
        DistExpr::Uniform(n) => uniform(0, n - 1),
        DistExpr::UniformRange(a, b) if a > b => {
            return Err(SemanticsError::InvalidParameter(format!("empty range {d}")));
        }
        DistExpr::UniformRange(a, b) => uniform(*a, *b),
        DistExpr::Geometric(p) => {
            let p = probability(p)?;
            one.sub(&p).div(&one.sub(&p.mul(&t)))?
        }
        DistExpr::Binomial(p, n) => {
            let k = literal_count(d, n)?;
            let p = probability(p)?;
            one.sub(&p).add(&p.mul(&t)).pow(k)
        }
        DistExpr::NBinomial(p, n) => {
            let k = literal_count(d, n)?;
            let p = probability(p)?;
            one.sub(&p).div(&one.sub(&p.mul(&t)))?.pow(k)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::{int, rat};
    use crate::syntax::parse_dist;

    fn pgf(s: &str) -> ClosedForm {
        dist_pgf(&parse_dist(s, &["a".to_string()]).unwrap()).unwrap()
    }

    fn cf(s: &str) -> ClosedForm {
        s.parse().unwrap()
    }

    #[test]
    fn table_of_generating_functions() {
        assert!(pgf("geometric(1/2)").cf_equal(&cf("(1/2)/(1 - 1/2*T)")));
        assert!(pgf("dirac(0)").cf_equal(&ClosedForm::one()));
        assert!(pgf("dirac(3)").cf_equal(&cf("T^3")));
        assert!(pgf("bernoulli(a)").cf_equal(&cf("1 - a + a*T")));
        assert!(pgf("binomial(1/3, 2)").cf_equal(&cf("(2/3 + 1/3*T)^2")));
        assert!(pgf("nbinomial(1/2, 2)").cf_equal(&cf("1/4/(1 - 1/2*T)^2")));
    }

    #[test]
    fn uniform_matches_geometric_sum_form() {
        // (1 - T^n) / (n (1 - T)) has a removable pole; compare by
        // cross-multiplication against the polynomial form
        let lhs = pgf("unif(1, 6)");
        let t6 = cf("T*(1 - T^6)");
        assert!(lhs.mul(&cf("6*(1 - T)")).cf_equal(&t6));
        let u = pgf("unif(4)");
        assert!(u.mul(&cf("4 - 4*T")).cf_equal(&cf("1 - T^4")));
    }

    #[test]
    fn invalid_probabilities() {
        let e = dist_pgf(&DistExpr::Bernoulli(ProbExpr::Lit(int(2))));
        assert!(matches!(e, Err(SemanticsError::InvalidParameter(_))));
        let e = dist_pgf(&DistExpr::Geometric(ProbExpr::Lit(rat(-1, 2))));
        assert!(matches!(e, Err(SemanticsError::InvalidParameter(_))));
    }
}
