//! Deciding whether a loop agrees with a loop-free invariant.
//!
//! Both `if (guard) { body; I } else { skip }` and `I` are run on the
//! universal second-order input `∏ 1/(1 - X_i U_i)`, whose coefficient at
//! `U^σ` is the point mass `X^σ`. The loop agrees with `I` iff the two
//! outputs coincide; when they do not, the smallest differing `U`-monomial
//! is a concrete input on which the programs disagree.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::cas::{ClosedForm, ExpVec, IndetId, Poly};
use crate::semantics::{indet, transform, SemanticsError};
use crate::syntax::{desugar, CoreGuard, CoreStmt, DesugarOptions, Program, SyntaxError, TEMP_PREFIX};

pub const DEFAULT_DEGREE_BOUND: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    /// `checked` holds the verdicts of loops checked before the failure.
    #[error("{label} has no invariant annotation")]
    MissingAnnotation { label: String, checked: Vec<CheckReport> },
    #[error("{label} does not agree with its invariant: {verdict}")]
    Unverified { label: String, verdict: Box<Verdict> },
}

/// A point-mass input on which two programs produce different outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    /// Exponents of program indeterminates, i.e. the initial state.
    pub input_state: ExpVec,
    /// Output of the loop side minus output of the invariant side.
    pub discrepancy: ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Found(Counterexample),
    /// The outputs differ, but not on any input of total size up to `bound`.
    BoundExhausted { bound: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equal { uast_assumed: bool },
    NotEqual(Witness),
    Error(String),
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, Verdict::Equal { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Equal { .. } => "Equal",
            Verdict::NotEqual(_) => "NotEqual",
            Verdict::Error(_) => "Error",
        }
    }

    /// What an `Equal` verdict licenses.
    pub fn conclusion(&self) -> Option<&'static str> {
        match self {
            Verdict::Equal { uast_assumed: true } => Some("the loop and the invariant denote the same distribution transformer"),
            Verdict::Equal { uast_assumed: false } => {
                Some("the loop is below the invariant on every input; they are equal if the loop terminates almost surely on every input")
            }
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equal { .. } => write!(f, "Equal: {}", self.conclusion().unwrap_or_default()),
            Verdict::NotEqual(Witness::Found(c)) => {
                write!(f, "NotEqual: on input {} the outputs differ by {}", c.input_state, c.discrepancy)
            }
            Verdict::NotEqual(Witness::BoundExhausted { bound }) => {
                write!(f, "NotEqual: no differing input of total size <= {bound}")
            }
            Verdict::Error(e) => write!(f, "Error: {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckRequest {
    pub guard: CoreGuard,
    pub body: CoreStmt,
    pub invariant: CoreStmt,
    /// Program variables spanning the input space. Variables occurring in
    /// the statements are added; temporaries are left out, being zero on
    /// entry.
    pub vars: Vec<String>,
    pub uast_assumed: bool,
    pub degree_bound: u32,
}

/// `∏ 1/(1 - X_i U_i)` over the given variables.
pub fn build_sop(vars: &[String]) -> ClosedForm {
    let mut den = Poly::one();
    for v in vars {
        let x = indet(v);
        let xu = ExpVec::from_pairs([(x.clone(), 1), (x.meta_partner().expect("program variable"), 1)]);
        den = &den * &(&Poly::one() - &Poly::monomial(xu, crate::cas::int(1)));
    }
    ClosedForm::new(Poly::one(), den).expect("constant term 1")
}

fn input_vars(given: &[String], stmts: &[&CoreStmt], guard: Option<&CoreGuard>) -> Vec<String> {
    let mut vars: Vec<String> = given.to_vec();
    if let Some(g) = guard {
        g.vars(&mut vars);
    }
    for s in stmts {
        s.vars(&mut vars);
    }
    vars.retain(|v| !v.starts_with(TEMP_PREFIX));
    vars
}

/// Compares two loop-free statements on every input over `vars`.
pub fn compare(lhs: &CoreStmt, rhs: &CoreStmt, vars: &[String], degree_bound: u32) -> Result<Option<Witness>, SemanticsError> {
    let sop = build_sop(vars);
    let a = transform(lhs, &sop)?;
    let b = transform(rhs, &sop)?;
    if a.cf_equal(&b) {
        return Ok(None);
    }
    let metas: Vec<IndetId> = vars.iter().map(|v| indet(v).meta_partner().expect("program variable")).collect();
    Ok(Some(find_counterexample(&a.sub(&b), &metas, degree_bound)))
}

/// `if (guard) { body; invariant } else { skip }`.
pub fn characteristic(guard: &CoreGuard, body: &CoreStmt, invariant: &CoreStmt) -> CoreStmt {
    CoreStmt::branch(guard, CoreStmt::seq(vec![body.clone(), invariant.clone()]), CoreStmt::Skip)
}

pub fn check_equiv(req: &CheckRequest) -> Verdict {
    if !req.body.loop_free() || !req.invariant.loop_free() {
        return Verdict::Error("loop body and invariant must be loop-free".into());
    }
    let phi = characteristic(&req.guard, &req.body, &req.invariant);
    let vars = input_vars(&req.vars, &[&req.body, &req.invariant], Some(&req.guard));
    match compare(&phi, &req.invariant, &vars, req.degree_bound) {
        Ok(None) => Verdict::Equal { uast_assumed: req.uast_assumed },
        Ok(Some(w)) => Verdict::NotEqual(w),
        Err(e) => Verdict::Error(e.to_string()),
    }
}

/// Exponent vectors of total degree `d` over `k` indeterminates, in
/// graded-lex order (larger exponents of earlier indeterminates first).
fn compositions(d: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in compositions(d - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The first meta-monomial (by total degree, then graded-lex) whose
/// coefficient in `diff` is nonzero.
pub fn find_counterexample(diff: &ClosedForm, metas: &[IndetId], degree_bound: u32) -> Witness {
    // coefficient lists, keyed by the exponents already extracted
    let mut cache: std::collections::HashMap<Vec<u32>, Vec<ClosedForm>> = std::collections::HashMap::new();
    let mut coeff = |tau: &[u32]| -> ClosedForm {
        let mut cur = diff.clone();
        for i in 0..tau.len() {
            let prefix = tau[..i].to_vec();
            let used: u32 = prefix.iter().sum();
            let list = cache
                .entry(prefix)
                .or_insert_with(|| cur.coefficients(&metas[i], (degree_bound - used) as usize));
            cur = list[tau[i] as usize].clone();
            if cur.is_zero() {
                break;
            }
        }
        cur
    };
    for d in 0..=degree_bound {
        for tau in compositions(d, metas.len()) {
            let c = coeff(&tau);
            if !c.is_zero() {
                let state = ExpVec::from_pairs(
                    metas.iter().zip(&tau).map(|(u, e)| (u.program_partner().expect("meta indeterminate"), *e)),
                );
                return Witness::Found(Counterexample { input_state: state, discrepancy: c });
            }
        }
    }
    Witness::BoundExhausted { bound: degree_bound }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub uast_assumed: bool,
    pub degree_bound: u32,
    pub desugar: DesugarOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { uast_assumed: false, degree_bound: DEFAULT_DEGREE_BOUND, desugar: DesugarOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub label: String,
    pub verdict: Verdict,
    pub millis: u128,
}

struct Compositional<'a> {
    vars: &'a [String],
    opts: CheckOptions,
    reports: Vec<CheckReport>,
    /// Invariant for an unannotated loop forming the whole program.
    top_spec: Option<CoreStmt>,
}

impl Compositional<'_> {
    /// Replaces every loop by its invariant, checking the loops on the way.
    fn resolve(&mut self, s: &CoreStmt) -> Result<CoreStmt, EquivError> {
        Ok(match s {
            CoreStmt::While { guard, body, invariant, label } => {
                let failures_before = self.failures();
                let body = self.resolve(body)?;
                let inv = match invariant {
                    Some(i) => (**i).clone(),
                    None => match self.top_spec.take() {
                        Some(spec) => spec,
                        None => {
                            return Err(EquivError::MissingAnnotation {
                                label: label.clone(),
                                checked: std::mem::take(&mut self.reports),
                            })
                        }
                    },
                };
                let start = Instant::now();
                let verdict = if self.failures() > failures_before {
                    Verdict::Error("unverified inner loop".into())
                } else {
                    check_equiv(&CheckRequest {
                        guard: guard.clone(),
                        body,
                        invariant: inv.clone(),
                        vars: self.vars.to_vec(),
                        uast_assumed: self.opts.uast_assumed,
                        degree_bound: self.opts.degree_bound,
                    })
                };
                self.reports.push(CheckReport { label: label.clone(), verdict, millis: start.elapsed().as_millis() });
                inv
            }
            CoreStmt::IfLess { var, n, then, els } => {
                CoreStmt::if_less(var, *n, self.resolve(then)?, self.resolve(els)?)
            }
            CoreStmt::PChoice { left, prob, right } => CoreStmt::PChoice {
                left: Box::new(self.resolve(left)?),
                prob: prob.clone(),
                right: Box::new(self.resolve(right)?),
            },
            CoreStmt::Seq(items) => CoreStmt::seq(items.iter().map(|i| self.resolve(i)).collect::<Result<_, _>>()?),
            s => s.clone(),
        })
    }

    fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.verdict.is_equal()).count()
    }
}

/// Checks every loop of `p` against its invariant, innermost first, and
/// then the loop-free remainder against the program's specification.
///
/// A loop without an annotation is accepted only when it is the whole
/// program and a specification is given. In the final comparison,
/// variables the specification never mentions are local to the program
/// and projected out on both sides.
pub fn verify_compositional(p: &Program, opts: CheckOptions) -> Result<Vec<CheckReport>, EquivError> {
    Ok(resolve_program(p, opts)?.1)
}

/// A loop-free statement with the semantics of `p`: loops are replaced by
/// their invariants, all of which must verify.
pub fn loop_free_semantics(p: &Program, opts: CheckOptions) -> Result<CoreStmt, EquivError> {
    let (resolved, reports) = resolve_program(p, opts)?;
    match reports.into_iter().find(|r| !r.verdict.is_equal() && r.label != "program") {
        Some(r) => Err(EquivError::Unverified { label: r.label, verdict: Box::new(r.verdict) }),
        None => Ok(resolved),
    }
}

fn resolve_program(p: &Program, opts: CheckOptions) -> Result<(CoreStmt, Vec<CheckReport>), EquivError> {
    let (body, spec) = desugar(p, opts.desugar)?;
    let whole_loop = matches!(&body, CoreStmt::While { invariant: None, .. });
    let mut c = Compositional {
        vars: &p.vars,
        opts,
        reports: Vec::new(),
        top_spec: if whole_loop { spec.clone() } else { None },
    };
    let resolved = c.resolve(&body)?;
    let mut reports = c.reports;
    if let (Some(spec), false) = (spec, whole_loop) {
        let start = Instant::now();
        let verdict = if reports.iter().any(|r| !r.verdict.is_equal()) {
            Verdict::Error("unverified inner loop".into())
        } else if !spec.loop_free() {
            Verdict::Error("specification must be loop-free".into())
        } else {
            let mut spec_vars = Vec::new();
            spec.vars(&mut spec_vars);
            let vars = input_vars(&p.vars, &[&resolved, &spec], None);
            let project = |s: &CoreStmt| {
                let mut items = vec![s.clone()];
                items.extend(
                    vars.iter().filter(|v| !spec_vars.contains(v)).map(|v| CoreStmt::AssignConst(v.clone(), 0)),
                );
                CoreStmt::seq(items)
            };
            match compare(&project(&resolved), &project(&spec), &vars, opts.degree_bound) {
                Ok(None) => Verdict::Equal { uast_assumed: opts.uast_assumed },
                Ok(Some(w)) => Verdict::NotEqual(w),
                Err(e) => Verdict::Error(e.to_string()),
            }
        };
        reports.push(CheckReport { label: "program".into(), verdict, millis: start.elapsed().as_millis() });
    }
    Ok((resolved, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn cf(s: &str) -> ClosedForm {
        s.parse().unwrap()
    }

    fn verdicts(src: &str) -> Vec<Verdict> {
        verify_compositional(&parse(src).unwrap(), CheckOptions::default())
            .unwrap()
            .into_iter()
            .map(|r| r.verdict)
            .collect()
    }

    #[test]
    fn universal_input() {
        let g = build_sop(&["n".into(), "c".into()]);
        assert!(g.cf_equal(&cf("1/((1 - N*U_N)*(1 - C*U_C))")));
        let g1 = build_sop(&["x".into()]);
        assert!(g1.cf_equal(&cf("1/(1 - X*U_X)")));
        let (x1, x2) = (indet("a"), indet("b"));
        let t = build_sop(&["a".into(), "b".into()]).taylor_terms(&[
            (x1.meta_partner().unwrap(), 2),
            (x2.meta_partner().unwrap(), 2),
        ]);
        let total: Vec<_> = t.into_iter().filter(|(m, _)| m.degree() <= 2).map(|(m, _)| m).collect();
        assert_eq!(total.len(), 6);
    }

    #[test]
    fn graded_lex_order_of_candidates() {
        assert_eq!(compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn witness_is_the_lowest_meta_monomial() {
        let metas = [IndetId::meta("x"), IndetId::meta("y")];
        let diff = cf("(1/2*X + Y)*U_X*U_Y + U_X^3");
        match find_counterexample(&diff, &metas, 10) {
            Witness::Found(c) => {
                assert_eq!(c.input_state, ExpVec::from_pairs([(indet("x"), 1), (indet("y"), 1)]));
                assert!(c.discrepancy.cf_equal(&cf("1/2*X + Y")));
            }
            w => panic!("{w:?}"),
        }
        assert_eq!(find_counterexample(&cf("U_X^4"), &metas, 3), Witness::BoundExhausted { bound: 3 });
    }

    #[test]
    fn geometric_loop_and_its_invariant() {
        let v = verdicts("vars n, c; while (n > 0) { {n := n - 1}[1/2]{c := c + 1} }\n#invariant\nc += iid(geometric(1/2), n); n := 0");
        assert_eq!(v, vec![Verdict::Equal { uast_assumed: false }]);
        let v = verdicts("vars n, c; while (n > 0) { {n := n - 1}[1/3]{c := c + 1} }\n#invariant\nc += iid(geometric(1/2), n); n := 0");
        match &v[0] {
            Verdict::NotEqual(Witness::Found(c)) => assert_eq!(c.input_state, ExpVec::var(&indet("n"), 1)),
            w => panic!("{w:?}"),
        }
    }

    #[test]
    fn missing_annotation() {
        let p = parse("vars x; while (x > 0) { x -= 1 }; while (x < 3) { x += 1 }").unwrap();
        assert!(matches!(verify_compositional(&p, CheckOptions::default()), Err(EquivError::MissingAnnotation { .. })));
    }

    #[test]
    fn failed_inner_loop_blocks_outer() {
        let v = verdicts(
            "vars x, y;
             @invariant { if (x > 0) { x := 0 } }
             while (x > 0) {
               x -= 1; y := 1;
               @invariant { y := 5 }
               while (y = 1) { {y := 0}[1/2]{skip} }
             }",
        );
        assert_eq!(v.len(), 2);
        assert!(matches!(v[0], Verdict::NotEqual(_)));
        assert_eq!(v[1], Verdict::Error("unverified inner loop".into()));
    }
}
