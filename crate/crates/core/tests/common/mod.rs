//! Generators and property checks shared by the property suite and the
//! acceptance harness.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use redip::cas::{rat, ClosedForm, ExpVec, IndetId, Poly, Rational};
use redip::queries::{mass, prob_event};
use redip::semantics::{filter_guard, indet, transform, unroll};
use redip::syntax::{CoreGuard, CoreStmt, DistExpr, Guard, ProbExpr, Rel};

pub const VARS: [&str; 2] = ["x", "y"];

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(&VARS[..]).prop_map(str::to_string)
}

fn prob() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![rat(1, 2), rat(1, 3), rat(3, 4), rat(2, 5)])
}

fn dist() -> impl Strategy<Value = DistExpr> {
    prop_oneof![
        prob().prop_map(|p| DistExpr::Bernoulli(ProbExpr::Lit(p))),
        prob().prop_map(|p| DistExpr::Geometric(ProbExpr::Lit(p))),
        (1u64..4).prop_map(DistExpr::Uniform),
        (0u64..3).prop_map(DistExpr::Dirac),
    ]
}

fn leaf() -> impl Strategy<Value = CoreStmt> {
    prop_oneof![
        Just(CoreStmt::Skip),
        (var(), 0u64..3).prop_map(|(x, n)| CoreStmt::AssignConst(x, n)),
        var().prop_map(CoreStmt::Decr),
        (any::<bool>(), dist()).prop_map(|(swap, dist)| {
            let (x, y) = if swap { ("y", "x") } else { ("x", "y") };
            CoreStmt::IidIncr { x: x.into(), dist, y: y.into() }
        }),
    ]
}

/// Random loop-free core programs over `x` and `y`.
pub fn program() -> impl Strategy<Value = CoreStmt> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (var(), 0u64..3, inner.clone(), inner.clone()).prop_map(|(v, n, t, e)| CoreStmt::IfLess {
                var: v,
                n,
                then: Box::new(t),
                els: Box::new(e),
            }),
            (inner.clone(), prob(), inner.clone()).prop_map(|(l, p, r)| CoreStmt::PChoice {
                left: Box::new(l),
                prob: ProbExpr::Lit(p),
                right: Box::new(r),
            }),
            prop::collection::vec(inner, 2..4).prop_map(CoreStmt::seq),
        ]
    })
}

fn monomial(a: u32, b: u32) -> ExpVec {
    ExpVec::from_pairs([(indet("x"), a), (indet("y"), b)])
}

/// Random distributions of unit mass: a finite mixture of point masses,
/// optionally convolved with a geometric distribution on `x`.
pub fn input() -> impl Strategy<Value = ClosedForm> {
    let points = prop::collection::vec((0u32..4, 0u32..4, 1i64..5), 1..4);
    (points, prop::option::of(prob())).prop_map(|(points, geo)| {
        let total: i64 = points.iter().map(|p| p.2).sum();
        let p = Poly::from_terms(points.iter().map(|&(a, b, w)| (monomial(a, b), rat(w, total))));
        let mut g = ClosedForm::poly(p);
        if let Some(q) = geo {
            let x = Poly::var(&indet("x"));
            let den = &Poly::one() - &x.scale(&q);
            let geo = ClosedForm::new(Poly::constant(Rational::from_integer(1.into()) - q), den).expect("invertible");
            g = g.mul(&geo);
        }
        g
    })
}

/// Random rectangular guards over `x` and `y`.
pub fn guard() -> impl Strategy<Value = Guard> {
    let rel = prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne, Rel::Gt, Rel::Ge]);
    let atom = (var(), rel, 0u64..4).prop_map(|(v, r, n)| Guard::atom(&v, r, n));
    atom.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Guard::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Guard::or(a, b)),
        ]
    })
}

/// Random rational closed forms in `X` and `Y` with invertible denominator.
pub fn closed_form() -> impl Strategy<Value = ClosedForm> {
    let term = (0u32..3, 0u32..3, -4i64..5);
    (prop::collection::vec(term.clone(), 1..4), prop::collection::vec(term, 0..3), 1i64..4).prop_map(|(n, d, c)| {
        let num = Poly::from_terms(n.iter().map(|&(a, b, k)| (monomial(a, b), rat(k, 1))));
        let tail = Poly::from_terms(d.iter().filter(|t| t.0 + t.1 > 0).map(|&(a, b, k)| (monomial(a, b), rat(k, 3))));
        let den = &Poly::constant(rat(c, 1)) + &tail;
        ClosedForm::new(num, den).expect("nonzero constant term")
    })
}

/// Terms with every exponent of `x` and `y` at most `d`.
fn truncate(p: &Poly, d: u32) -> Poly {
    let keep = |m: &ExpVec| VARS.iter().all(|v| m.exp(&indet(v)) <= d);
    Poly::from_terms(p.terms().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())))
}

fn upto(d: u32) -> Vec<(IndetId, u32)> {
    VARS.iter().map(|v| (indet(v), d)).collect()
}

fn meta_monomial(a: u32, b: u32) -> ExpVec {
    ExpVec::from_pairs([(IndetId::meta("x"), a), (IndetId::meta("y"), b)])
}

fn sem(p: &CoreStmt, g: &ClosedForm) -> Result<ClosedForm, TestCaseError> {
    transform(p, g).map_err(|e| TestCaseError::fail(format!("{p}: {e}")))
}

pub fn mass_preservation(p: &CoreStmt, g: &ClosedForm) -> Result<(), TestCaseError> {
    let out = sem(p, g)?;
    let m_in = mass(g).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let m_out = mass(&out).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(m_in.as_rational(), Some(rat(1, 1)));
    prop_assert_eq!(m_out, m_in, "{}", p);
    Ok(())
}

pub fn linearity(p: &CoreStmt, g1: &ClosedForm, g2: &ClosedForm, a: &Rational) -> Result<(), TestCaseError> {
    let one_minus = rat(1, 1) - a;
    let mix = g1.scale(a).add(&g2.scale(&one_minus));
    let lhs = sem(p, &mix)?;
    let rhs = sem(p, g1)?.scale(a).add(&sem(p, g2)?.scale(&one_minus));
    prop_assert!(lhs.cf_equal(&rhs), "{}: {} vs {}", p, lhs, rhs);
    Ok(())
}

pub fn guard_partition(g: &ClosedForm, phi: &Guard) -> Result<(), TestCaseError> {
    let c = CoreGuard::from_guard(phi);
    let not_c = CoreGuard::from_guard(&Guard::not(phi.clone()));
    let sum = filter_guard(g, &c).add(&filter_guard(g, &not_c));
    prop_assert!(sum.cf_equal(g), "{}", phi);
    let p = prob_event(g, phi).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let q = prob_event(g, &Guard::not(phi.clone())).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let (p, q) = (p.as_rational().expect("rational"), q.as_rational().expect("rational"));
    prop_assert_eq!(p + q, rat(1, 1));
    Ok(())
}

pub fn meta_homogeneity(p: &CoreStmt, g: &ClosedForm, h: &ClosedForm, a: u32, b: u32) -> Result<(), TestCaseError> {
    let u = meta_monomial(a, b);
    let lhs = sem(p, &g.mul_monomial(&u))?;
    prop_assert!(lhs.cf_equal(&sem(p, g)?.mul_monomial(&u)), "{}", p);
    let mixed = sem(p, &h.add(&g.mul_monomial(&u)))?;
    prop_assert!(mixed.cf_equal(&sem(p, h)?.add(&sem(p, g)?.mul_monomial(&u))), "{}", p);
    Ok(())
}

/// Series of `num/den` times `den` agrees with `num` up to degree `d`.
pub fn series_consistency(f: &ClosedForm, d: u32) -> Result<(), TestCaseError> {
    let series = f.taylor(&upto(d)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(truncate(&(&series * f.den()), d), truncate(f.num(), d), "{}", f);
    Ok(())
}

/// The `k`-th coefficient of `∂f/∂X` is `(k + 1)` times the `(k + 1)`-th of `f`.
pub fn derivative_consistency(f: &ClosedForm, d: usize) -> Result<(), TestCaseError> {
    let x = indet("x");
    let df = f.derivative(&x).coefficients(&x, d);
    let fc = f.coefficients(&x, d + 1);
    for k in 0..d {
        let expect = fc[k + 1].scale(&rat(k as i64 + 1, 1));
        prop_assert!(df[k].cf_equal(&expect), "{}: coefficient {} is {} not {}", f, k, df[k], expect);
    }
    Ok(())
}

/// `while (n > 0) { {n := n - 1}[1/2]{c := c + 1} }`.
pub fn halving_loop() -> (CoreGuard, CoreStmt) {
    let guard = CoreGuard::In { var: "n".into(), lo: 1, hi: None };
    let body = CoreStmt::PChoice {
        left: Box::new(CoreStmt::Decr("n".into())),
        prob: ProbExpr::Lit(rat(1, 2)),
        right: Box::new(increment("c")),
    };
    (guard, body)
}

/// `x := x + 1` in core form.
pub fn increment(x: &str) -> CoreStmt {
    CoreStmt::seq(vec![
        CoreStmt::AssignConst("_t".into(), 1),
        CoreStmt::IidIncr { x: x.into(), dist: DistExpr::Dirac(1), y: "_t".into() },
        CoreStmt::AssignConst("_t".into(), 0),
    ])
}

/// Unrolling the loop on a point mass never loses mass as `k` grows, and
/// stays below the loop's exact output `c += iid(geometric(1/2), n)`.
pub fn monotone_unrolling(n: u32, c: u32, k: usize) -> Result<(), TestCaseError> {
    let (guard, body) = halving_loop();
    let g = ClosedForm::monomial(ExpVec::from_pairs([(indet("n"), n), (indet("c"), c)]));
    let ak = unroll(&guard, &body, k, &g).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let ak1 = unroll(&guard, &body, k + 1, &g).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let step = ak1.sub(&ak).as_poly().expect("finite support");
    prop_assert!(step.terms().all(|(_, c)| *c >= rat(0, 1)), "k = {}: {}", k, step);
    let exact = g.subst(&indet("n"), &ClosedForm::one()).expect("polynomial").mul(
        &"(1/2)/(1 - 1/2*C)".parse::<ClosedForm>().expect("closed form").pow(n),
    );
    let below = ak1.as_poly().expect("finite support");
    let cc = indet("c");
    let exact_coeffs = exact.coefficients(&cc, below.degree_in(&cc) as usize + 1);
    for (m, v) in below.terms() {
        prop_assert!(m.exp(&indet("n")) == 0, "unfinished run escaped: {}", m);
        let e = exact_coeffs[m.exp(&cc) as usize].as_constant().expect("constant");
        prop_assert!(*v <= e, "k = {}: {} above {}", k, v, e);
    }
    Ok(())
}
