//! The forward generating-function semantics of loop-free core programs.
//!
//! A program denotes a map on closed forms: the input is the generating
//! function of a (sub-)distribution over program states, possibly with
//! meta indeterminates and parameters, and the output is the generating
//! function of the final states.

mod dist;

pub use dist::{dist_pgf, prob_cf};

use thiserror::Error;

use crate::cas::{CasError, ClosedForm, ExpVec, IndetId, Poly};
use crate::syntax::{CoreGuard, CoreStmt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error("iid source and target are the same variable {0}")]
    SameVariableIid(String),
    #[error("`{x} -= {y}` can make {x} negative")]
    NegativeSubtraction { x: String, y: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),
    #[error("{0} has no loop-free semantics; check it against an invariant instead")]
    UnexpectedLoop(String),
}

/// Indeterminate of a program variable.
pub fn indet(var: &str) -> IndetId {
    IndetId::program(var)
}

/// A distribution over program states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub cf: ClosedForm,
    pub vars: Vec<String>,
}

impl State {
    pub fn new(vars: &[String], cf: ClosedForm) -> State {
        State { cf, vars: vars.to_vec() }
    }

    /// The point mass on `σ`, given as `(variable, value)` pairs; unlisted
    /// variables are zero.
    pub fn point(vars: &[String], values: &[(&str, u32)]) -> State {
        let m = ExpVec::from_pairs(values.iter().map(|(v, e)| (indet(v), *e)));
        State::new(vars, ClosedForm::monomial(m))
    }

    pub fn apply(&self, p: &CoreStmt) -> Result<State, SemanticsError> {
        Ok(State { cf: transform(p, &self.cf)?, vars: self.vars.clone() })
    }
}

/// The part of `g` whose states satisfy `guard`.
pub fn filter_guard(g: &ClosedForm, guard: &CoreGuard) -> ClosedForm {
    match guard {
        CoreGuard::Const(true) => g.clone(),
        CoreGuard::Const(false) => ClosedForm::zero(),
        CoreGuard::In { var, lo, hi } => {
            let x = indet(var);
            let below_hi = match hi {
                Some(h) => g.truncate_below(&x, *h as u32),
                None => g.clone(),
            };
            if *lo == 0 {
                below_hi
            } else {
                below_hi.sub(&below_hi.truncate_below(&x, *lo as u32))
            }
        }
        CoreGuard::Not(a) => g.sub(&filter_guard(g, a)),
        CoreGuard::And(a, b) => filter_guard(&filter_guard(g, b), a),
        CoreGuard::Or(a, b) => {
            let fa = filter_guard(g, a);
            let fb = filter_guard(g, b);
            fa.add(&fb).sub(&filter_guard(&fa, b))
        }
    }
}

/// `⟦p⟧(g)` for a loop-free core statement.
pub fn transform(p: &CoreStmt, g: &ClosedForm) -> Result<ClosedForm, SemanticsError> {
    if g.is_zero() {
        return Ok(ClosedForm::zero());
    }
    match p {
        CoreStmt::Skip => Ok(g.clone()),
        CoreStmt::AssignConst(x, n) => {
            let x = indet(x);
            Ok(g.eval_one(&x)?.mul_monomial(&ExpVec::var(&x, *n as u32)))
        }
        CoreStmt::Decr(x) => {
            let x = indet(x);
            let g0 = g.eval_zero(&x);
            Ok(g.sub(&g0).shift_down(&x)?.add(&g0))
        }
        CoreStmt::IidIncr { x, dist, y } => {
            if x == y {
                return Err(SemanticsError::SameVariableIid(x.clone()));
            }
            let (xi, yi) = (indet(x), indet(y));
            let d = dist_pgf(dist)?.rename(&IndetId::placeholder(), &xi);
            Ok(g.subst(&yi, &ClosedForm::var(&yi).mul(&d))?)
        }
        CoreStmt::SubVar(x, y) => sub_var(g, x, y),
        CoreStmt::IfLess { var, n, then, els } => {
            let below = g.truncate_below(&indet(var), *n as u32);
            let above = g.sub(&below);
            Ok(transform(then, &below)?.add(&transform(els, &above)?))
        }
        CoreStmt::PChoice { left, prob, right } => {
            let p = prob_cf(prob)?;
            let l = transform(left, g)?;
            let r = transform(right, g)?;
            Ok(l.mul(&p).add(&r.mul(&ClosedForm::one().sub(&p))))
        }
        CoreStmt::Seq(items) => {
            let mut cur = g.clone();
            for s in items {
                cur = transform(s, &cur)?;
            }
            Ok(cur)
        }
        CoreStmt::While { label, .. } => Err(SemanticsError::UnexpectedLoop(label.clone())),
    }
}

/// Rewrites every term `X^a Y^b` of `p` to `X^(a - b + k) Y^b`, with the
/// smallest `k >= 0` keeping all exponents natural.
fn laurent_shift(p: &Poly, x: &IndetId, y: &IndetId) -> (Poly, i64) {
    let k = p.terms().map(|(m, _)| m.exp(y) as i64 - m.exp(x) as i64).max().unwrap_or(0).max(0);
    let out = Poly::from_terms(p.terms().map(|(m, c)| {
        let e = m.exp(x) as i64 - m.exp(y) as i64 + k;
        (m.with_exp(x, e as u32), c.clone())
    }));
    (out, k)
}

/// `x -= y` as the substitution `Y ↦ Y/X`, defined when the result is again
/// a power series.
fn sub_var(g: &ClosedForm, x: &str, y: &str) -> Result<ClosedForm, SemanticsError> {
    if x == y {
        return Ok(g.eval_one(&indet(x))?);
    }
    let negative = || SemanticsError::NegativeSubtraction { x: x.to_string(), y: y.to_string() };
    let (xi, yi) = (indet(x), indet(y));
    let (n, kn) = laurent_shift(g.num(), &xi, &yi);
    let (d, kd) = laurent_shift(g.den(), &xi, &yi);
    let (on, od) = (n.ord_in(&xi), d.ord_in(&xi));
    let e = kd - kn + on as i64 - od as i64;
    if e < 0 {
        return Err(negative());
    }
    let n = n.shift_down(&xi, on).expect("order divides").mul_monomial(&ExpVec::var(&xi, e as u32));
    let d = d.shift_down(&xi, od).expect("order divides");
    ClosedForm::new(n, d).map_err(|_| negative())
}

/// The `k`-th Kleene approximation of `while (guard) { body }` applied to
/// `g`: the output mass of runs that exit after at most `k` iterations.
pub fn unroll(guard: &CoreGuard, body: &CoreStmt, k: usize, g: &ClosedForm) -> Result<ClosedForm, SemanticsError> {
    let mut acc = ClosedForm::zero();
    let mut cur = g.clone();
    for i in 0..=k {
        let inside = filter_guard(&cur, guard);
        acc = acc.add(&cur.sub(&inside));
        if i == k || inside.is_zero() {
            break;
        }
        cur = transform(body, &inside)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::rat;
    use crate::syntax::{desugar, parse, DesugarOptions};

    fn cf(s: &str) -> ClosedForm {
        s.parse().unwrap()
    }

    fn run(src: &str, input: &str) -> ClosedForm {
        let (core, _) = desugar(&parse(src).unwrap(), DesugarOptions::default()).unwrap();
        transform(&core, &cf(input)).unwrap()
    }

    #[test]
    fn constant_assignment_marginalises() {
        let out = run("vars x, y; x := 5", "1/2*X*Y^2 + 1/2*X^2*Y^3");
        assert!(out.cf_equal(&cf("(1/2*Y^2 + 1/2*Y^3)*X^5")));
    }

    #[test]
    fn iid_increment_substitutes() {
        let out = run("vars x, y; x += iid(bernoulli(1/2), y)", "1/5 + 3/10*Y + 1/2*Y^2");
        let expect = cf("1/5 + 3/10*Y*(1/2 + 1/2*X) + 1/2*Y^2*(1/2 + 1/2*X)^2");
        assert!(out.cf_equal(&expect));
    }

    #[test]
    fn skip_and_decrement() {
        assert!(run("vars x; skip", "X^2").cf_equal(&cf("X^2")));
        assert!(run("vars x; x -= 1", "1/2 + 1/2*X^3").cf_equal(&cf("1/2 + 1/2*X^2")));
        let geo = run("vars x; x--", "(1/2)/(1 - 1/2*X)");
        assert!(geo.cf_equal(&cf("1/2 + (1/4)/(1 - 1/2*X)")));
    }

    #[test]
    fn guard_filters() {
        let g = cf("1/5 + 3/10*Y + 1/2*Y^2");
        let f = filter_guard(&g, &CoreGuard::less("y", 2));
        assert!(f.cf_equal(&cf("1/5 + 3/10*Y")));
        assert!(filter_guard(&g, &CoreGuard::less("y", 0)).is_zero());
        let g0 = cf("1/((1 - N*U_N)*(1 - C*U_C))");
        let pos = CoreGuard::In { var: "n".into(), lo: 1, hi: None };
        let expect = g0.sub(&g0.eval_zero(&indet("n")));
        assert!(filter_guard(&g0, &pos).cf_equal(&expect));
    }

    #[test]
    fn choice_is_a_mixture() {
        let out = run("params a; vars x; {x := 1}[a]{x := 2}", "1");
        assert!(out.cf_equal(&cf("a*X + (1 - a)*X^2")));
    }

    #[test]
    fn sampling_assignment() {
        let out = run("vars x, y; x := geometric(1/2)", "Y*X^4");
        assert!(out.cf_equal(&cf("Y*(1/2)/(1 - 1/2*X)")));
    }

    #[test]
    fn subtraction_of_a_smaller_variable() {
        // y <= x always: x uniform on {2, 3}, y in {0, 1, 2}
        let g = cf("(1/2*X^2 + 1/2*X^3)*(1/3 + 1/3*Y + 1/3*Y^2)");
        let out = run("vars x, y; x -= y", &g.to_string());
        let expect = cf("(1/2*X^2 + 1/2*X^3)*(1/3*X^2 + 1/3*Y*X + 1/3*Y^2)");
        assert!(out.mul(&cf("X^2")).cf_equal(&expect));
        let bad = desugar(&parse("vars x, y; x -= y").unwrap(), DesugarOptions::default()).unwrap().0;
        assert!(matches!(transform(&bad, &cf("Y")), Err(SemanticsError::NegativeSubtraction { .. })));
    }

    #[test]
    fn same_variable_iid_is_rejected() {
        let p = CoreStmt::IidIncr { x: "x".into(), dist: crate::syntax::DistExpr::Dirac(1), y: "x".into() };
        assert_eq!(transform(&p, &cf("X")), Err(SemanticsError::SameVariableIid("x".into())));
    }

    #[test]
    fn unrolling_starts_with_the_exit_mass() {
        let guard = CoreGuard::In { var: "n".into(), lo: 1, hi: None };
        let body = CoreStmt::Decr("n".into());
        let g = cf("1/2 + 1/2*N^3");
        assert!(unroll(&guard, &body, 0, &g).unwrap().cf_equal(&cf("1/2")));
        assert!(unroll(&guard, &body, 2, &g).unwrap().cf_equal(&cf("1/2")));
        assert!(unroll(&guard, &body, 3, &g).unwrap().cf_equal(&ClosedForm::one()));
        let never = unroll(&CoreGuard::Const(false), &body, 7, &g).unwrap();
        assert!(never.cf_equal(&g));
        assert_eq!(rat(1, 2), unroll(&guard, &body, 1, &g).unwrap().as_constant().unwrap());
    }
}
