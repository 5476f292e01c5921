//! Quantities of an output distribution given as a closed form.
//!
//! Moments are computed as factorial moments: `E[x(x-1)...(x-a+1)]` is the
//! `a`-th derivative in `X` evaluated at `X = 1`. A pole at 1 that does not
//! cancel means the moment is infinite.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::cas::{parse_closed_form, CasError, ClosedForm, ExpVec, IndetId, Poly, Projection, Rational, Resolver};
use crate::semantics::{filter_guard, indet};
use crate::syntax::{parse_guard, CoreGuard, Guard, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("indeterminate form: {0}")]
    IndeterminateForm(String),
    #[error("malformed query {0:?}; expected mass, E[expr], Var[x], P[guard], marginal[x, ...] or coeff[x=n, ...]")]
    Malformed(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{0} is not a polynomial in the program variables")]
    NotPolynomial(String),
}

/// A finite value, possibly symbolic in the parameters, or `+∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryResult {
    Finite(ClosedForm),
    Infinity,
}

impl QueryResult {
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            QueryResult::Finite(c) => c.as_constant(),
            QueryResult::Infinity => None,
        }
    }
}

impl fmt::Display for QueryResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryResult::Finite(c) => write!(f, "{c}"),
            QueryResult::Infinity => write!(f, "inf"),
        }
    }
}

fn program_indets(g: &ClosedForm) -> Vec<IndetId> {
    g.indets().into_iter().filter(IndetId::is_program).collect()
}

/// Sets every program indeterminate to 1. `Divergent` when a pole at 1
/// remains after cancellation.
fn at_one(g: &ClosedForm) -> Projection {
    let mut cur = g.clone();
    for x in program_indets(g) {
        match cur.eval_at(&x, &Rational::one()) {
            Projection::Finite(c) => cur = c,
            Projection::Divergent => return Projection::Divergent,
        }
    }
    Projection::Finite(cur)
}

/// Total probability mass.
pub fn mass(g: &ClosedForm) -> Result<QueryResult, QueryError> {
    match at_one(g) {
        Projection::Finite(c) => Ok(QueryResult::Finite(c)),
        Projection::Divergent => Err(CasError::IllDefinedProjection { indet: "program variables".into(), value: "1".into() }.into()),
    }
}

/// `E[x1^(a1) x2^(a2) ...]` with `^(a)` the falling factorial power.
pub fn factorial_moment(g: &ClosedForm, powers: &ExpVec) -> QueryResult {
    let mut d = g.clone();
    for (x, a) in powers.iter() {
        for _ in 0..a {
            d = d.derivative(x);
        }
    }
    match at_one(&d) {
        Projection::Finite(c) => QueryResult::Finite(c),
        Projection::Divergent => QueryResult::Infinity,
    }
}

/// Stirling numbers of the second kind `S(k, j)` for `j = 0..=k`.
fn stirling2(k: u32) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for n in 1..=k as usize {
        let mut next = vec![BigInt::zero(); n + 1];
        for j in 1..=n {
            let keep = if j < n { &row[j] * BigInt::from(j) } else { BigInt::zero() };
            next[j] = keep + &row[j - 1];
        }
        row = next;
    }
    row
}

/// `x^k = Σ_j S(k, j) x^(j)`, expanded over every variable of the monomial.
fn falling_factorial_basis(m: &ExpVec) -> Vec<(ExpVec, Rational)> {
    let mut out = vec![(ExpVec::one(), Rational::one())];
    for (x, k) in m.iter() {
        let s = stirling2(k);
        let mut next = Vec::new();
        for (base, c) in &out {
            for (j, sj) in s.iter().enumerate() {
                if !sj.is_zero() {
                    next.push((base.mul(&ExpVec::var(x, j as u32)), c * Rational::from_integer(sj.clone())));
                }
            }
        }
        out = next;
    }
    out
}

/// Expected value of a polynomial in the program variables.
pub fn expectation(g: &ClosedForm, expr: &Poly) -> Result<QueryResult, QueryError> {
    if let Some(bad) = expr.indets().into_iter().find(|x| !x.is_program()) {
        return Err(QueryError::NotPolynomial(format!("{expr} (mentions {bad})")));
    }
    let mut finite = ClosedForm::zero();
    let mut infinite_sign: Option<bool> = None;
    for (m, c) in expr.terms() {
        for (ff, s) in falling_factorial_basis(m) {
            let coeff = c * &s;
            match factorial_moment(g, &ff) {
                QueryResult::Finite(v) => finite = finite.add(&v.scale(&coeff)),
                QueryResult::Infinity => {
                    let positive = coeff.is_positive();
                    match infinite_sign {
                        Some(p) if p != positive => {
                            return Err(QueryError::IndeterminateForm(format!("E[{expr}] is inf - inf")));
                        }
                        _ => infinite_sign = Some(positive),
                    }
                }
            }
        }
    }
    match infinite_sign {
        None => Ok(QueryResult::Finite(finite)),
        Some(true) => Ok(QueryResult::Infinity),
        Some(false) => Err(QueryError::IndeterminateForm(format!("E[{expr}] is -inf"))),
    }
}

/// `E[x(x-1)] + E[x] - E[x]^2`, on the closed form as given: a
/// sub-distribution is not renormalised first.
pub fn variance(g: &ClosedForm, x: &str) -> Result<QueryResult, QueryError> {
    let xi = indet(x);
    let m1 = factorial_moment(g, &ExpVec::var(&xi, 1));
    let m2 = factorial_moment(g, &ExpVec::var(&xi, 2));
    match (m1, m2) {
        (QueryResult::Finite(a), QueryResult::Finite(b)) => Ok(QueryResult::Finite(b.add(&a).sub(&a.mul(&a)))),
        (QueryResult::Finite(_), QueryResult::Infinity) => Ok(QueryResult::Infinity),
        _ => Err(QueryError::IndeterminateForm(format!("Var[{x}] is inf - inf"))),
    }
}

/// Probability of a rectangular event.
pub fn prob_event(g: &ClosedForm, event: &Guard) -> Result<QueryResult, QueryError> {
    mass(&filter_guard(g, &CoreGuard::from_guard(event)))
}

/// Marginal distribution of the kept variables.
pub fn marginal(g: &ClosedForm, keep: &[String]) -> Result<ClosedForm, QueryError> {
    let mut cur = g.clone();
    for x in program_indets(g) {
        if !keep.iter().any(|k| indet(k) == x) {
            cur = cur.eval_one(&x)?;
        }
    }
    Ok(cur)
}

/// Probability of the single state `σ`; variables absent from `σ` are 0.
pub fn coeff_state(g: &ClosedForm, sigma: &ExpVec) -> ClosedForm {
    let mut cur = g.clone();
    for (x, e) in sigma.iter() {
        cur = cur.coeff(x, e as usize);
    }
    for x in program_indets(&cur) {
        cur = cur.eval_zero(&x);
    }
    cur
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Mass,
    Expectation(Poly),
    Variance(String),
    Prob(Guard),
    Marginal(Vec<String>),
    Coeff(ExpVec),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Value(QueryResult),
    Distribution(ClosedForm),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Value(v) => write!(f, "{v}"),
            Answer::Distribution(c) => write!(f, "{c}"),
        }
    }
}

fn bracketed<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    let rest = s.strip_prefix(head)?.trim_start();
    rest.strip_prefix('[')?.strip_suffix(']')
}

fn known_var(vars: &[String], v: &str) -> Result<String, QueryError> {
    let v = v.trim();
    vars.iter().find(|w| *w == v).cloned().ok_or_else(|| QueryError::UnknownVariable(v.to_string()))
}

/// Parses the query mini-language.
pub fn parse_query(s: &str, vars: &[String], params: &[String]) -> Result<Query, QueryError> {
    let s = s.trim();
    if s == "mass" {
        return Ok(Query::Mass);
    }
    if let Some(e) = bracketed(s, "E") {
        let cf = parse_closed_form(e, &Resolver::new(vars, params)).map_err(|err| QueryError::NotPolynomial(format!("{e} ({err})")))?;
        let p = cf.as_poly().ok_or_else(|| QueryError::NotPolynomial(e.to_string()))?;
        return Ok(Query::Expectation(p));
    }
    if let Some(x) = bracketed(s, "Var") {
        return Ok(Query::Variance(known_var(vars, x)?));
    }
    if let Some(g) = bracketed(s, "P") {
        return Ok(Query::Prob(parse_guard(g, vars)?));
    }
    if let Some(list) = bracketed(s, "marginal") {
        let keep = list.split(',').map(|v| known_var(vars, v)).collect::<Result<_, _>>()?;
        return Ok(Query::Marginal(keep));
    }
    if let Some(list) = bracketed(s, "coeff") {
        let mut pairs = Vec::new();
        for item in list.split(',').filter(|i| !i.trim().is_empty()) {
            let (v, n) = item.split_once('=').ok_or_else(|| QueryError::Malformed(s.to_string()))?;
            let n: u32 = n.trim().parse().map_err(|_| QueryError::Malformed(s.to_string()))?;
            pairs.push((indet(&known_var(vars, v)?), n));
        }
        return Ok(Query::Coeff(ExpVec::from_pairs(pairs)));
    }
    Err(QueryError::Malformed(s.to_string()))
}

pub fn run_query(g: &ClosedForm, q: &Query) -> Result<Answer, QueryError> {
    Ok(match q {
        Query::Mass => Answer::Value(mass(g)?),
        Query::Expectation(e) => Answer::Value(expectation(g, e)?),
        Query::Variance(x) => Answer::Value(variance(g, x)?),
        Query::Prob(e) => Answer::Value(prob_event(g, e)?),
        Query::Marginal(keep) => Answer::Distribution(marginal(g, keep)?),
        Query::Coeff(s) => Answer::Value(QueryResult::Finite(coeff_state(g, s))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::{int, rat};

    fn cf(s: &str) -> ClosedForm {
        s.parse().unwrap()
    }

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ask(g: &str, q: &str, v: &[&str]) -> Answer {
        run_query(&cf(g), &parse_query(q, &vars(v), &[]).unwrap()).unwrap()
    }

    fn value(a: Answer) -> Rational {
        match a {
            Answer::Value(QueryResult::Finite(c)) => c.as_constant().expect("rational"),
            a => panic!("{a:?}"),
        }
    }

    #[test]
    fn masses() {
        assert_eq!(value(ask("(1/2)/(1 - 1/2*X)", "mass", &["x"])), int(1));
        assert_eq!(value(ask("1/5 + 3/10*Y", "mass", &["y"])), rat(1, 2));
    }

    #[test]
    fn stirling_rows() {
        let s: Vec<i64> = stirling2(4).iter().map(|b| i64::try_from(b).unwrap()).collect();
        assert_eq!(s, vec![0, 1, 7, 6, 1]);
        assert_eq!(stirling2(0), vec![BigInt::one()]);
    }

    #[test]
    fn binomial_split_queries() {
        let g = "(1/2*M + 1/2*N)^10";
        assert_eq!(value(ask(g, "E[m^3 + 2*m*n + n^2]", &["m", "n"])), int(235));
        assert_eq!(value(ask(g, "P[m > 7 & n < 3]", &["m", "n"])), rat(7, 128));
        assert_eq!(value(ask(g, "coeff[m=4, n=6]", &["m", "n"])), rat(105, 512));
    }

    #[test]
    fn geometric_moments() {
        let g = "(1/2)/(1 - 1/2*X)";
        assert_eq!(value(ask(g, "E[x]", &["x"])), int(1));
        assert_eq!(value(ask(g, "Var[x]", &["x"])), int(2));
        assert_eq!(value(ask("X^4", "Var[x]", &["x"])), int(0));
        assert_eq!(value(ask("1/(2 - X)", "coeff[x=2]", &["x"])), rat(1, 8));
        assert_eq!(value(ask("X^5", "coeff[x=5]", &["x"])), int(1));
        assert_eq!(value(ask(g, "E[1]", &["x"])), int(1));
    }

    #[test]
    fn infinite_mean() {
        // a rational closed form finite at 1 has finite derivatives there, so
        // divergence shows up for measures of infinite mass
        let g = cf("1/(1 - X)");
        assert_eq!(factorial_moment(&g, &ExpVec::var(&indet("x"), 1)), QueryResult::Infinity);
        assert_eq!(expectation(&g, &Poly::var(&indet("x"))), Ok(QueryResult::Infinity));
        assert!(mass(&g).is_err());
        assert!(matches!(variance(&g, "x"), Err(QueryError::IndeterminateForm(_))));
        let neg = Poly::var(&indet("x")).scale(&int(-1));
        assert!(matches!(expectation(&g, &neg), Err(QueryError::IndeterminateForm(_))));
    }

    #[test]
    fn marginals() {
        let m = marginal(&cf("1/2*X*Y^2 + 1/2*X^2*Y^3"), &vars(&["y"])).unwrap();
        assert!(m.cf_equal(&cf("1/2*Y^2 + 1/2*Y^3")));
        let m = marginal(&cf("3/(2*X*Y - 5*X - 4*Y + 10)"), &vars(&["y"])).unwrap();
        assert!(m.cf_equal(&cf("(3/5)/(1 - 2/5*Y)")));
        let g = cf("X*Y");
        assert_eq!(marginal(&g, &vars(&["x", "y"])).unwrap(), g);
    }

    #[test]
    fn malformed_queries() {
        assert!(matches!(parse_query("median", &vars(&["x"]), &[]), Err(QueryError::Malformed(_))));
        assert!(matches!(parse_query("Var[z]", &vars(&["x"]), &[]), Err(QueryError::UnknownVariable(_))));
        assert!(matches!(parse_query("E[1/x]", &vars(&["x"]), &[]), Err(QueryError::NotPolynomial(_))));
    }
}
