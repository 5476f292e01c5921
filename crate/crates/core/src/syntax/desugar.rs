//! Lowering of surface statements to the core language.
//!
//! The core language has constant assignment, decrement, iid increments,
//! variable subtraction, `if (x < n)`, probabilistic choice, sequencing and
//! loops. Everything else is rewritten in terms of these, using fresh
//! temporaries from the reserved `_` namespace that are zero outside the
//! code they were generated for.

use std::fmt;

use super::ast::{push_unique, Count, DistExpr, Guard, ProbExpr, Program, Rel, Stmt};
use super::guard::CoreGuard;
use super::SyntaxError;

/// Prefix shared by every generated temporary.
pub const TEMP_PREFIX: &str = "_";

const SCRATCH: &str = "_t";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreStmt {
    Skip,
    AssignConst(String, u64),
    Decr(String),
    /// `x += iid(dist, y)`; `dist` has a literal count if it has one at all.
    IidIncr { x: String, dist: DistExpr, y: String },
    /// `x -= y`, undefined when it would go negative.
    SubVar(String, String),
    IfLess { var: String, n: u64, then: Box<CoreStmt>, els: Box<CoreStmt> },
    PChoice { left: Box<CoreStmt>, prob: ProbExpr, right: Box<CoreStmt> },
    Seq(Vec<CoreStmt>),
    While { guard: CoreGuard, body: Box<CoreStmt>, invariant: Option<Box<CoreStmt>>, label: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DesugarOptions {
    /// Encode `{P}[p]{Q}` as a Bernoulli draw into a temporary followed by a
    /// test, instead of keeping the choice as a core statement.
    pub choice_via_temp: bool,
}

impl CoreStmt {
    pub fn seq(items: Vec<CoreStmt>) -> CoreStmt {
        let mut flat = Vec::new();
        for s in items {
            match s {
                CoreStmt::Skip => {}
                CoreStmt::Seq(inner) => flat.extend(inner),
                s => flat.push(s),
            }
        }
        match flat.len() {
            0 => CoreStmt::Skip,
            1 => flat.pop().unwrap(),
            _ => CoreStmt::Seq(flat),
        }
    }

    pub fn if_less(var: &str, n: u64, then: CoreStmt, els: CoreStmt) -> CoreStmt {
        if n == 0 {
            return els;
        }
        if then == els {
            return then;
        }
        CoreStmt::IfLess { var: var.to_string(), n, then: Box::new(then), els: Box::new(els) }
    }

    /// Compiles a branch on a normalised guard into nested `if (x < n)`.
    pub fn branch(guard: &CoreGuard, then: CoreStmt, els: CoreStmt) -> CoreStmt {
        match guard {
            CoreGuard::Const(true) => then,
            CoreGuard::Const(false) => els,
            CoreGuard::In { var, lo, hi } => match (*lo, *hi) {
                (0, Some(h)) => Self::if_less(var, h, then, els),
                (lo, None) => Self::if_less(var, lo, els, then),
                (lo, Some(h)) => {
                    let inner = Self::if_less(var, lo, els.clone(), then);
                    Self::if_less(var, h, inner, els)
                }
            },
            CoreGuard::Not(a) => Self::branch(a, els, then),
            CoreGuard::And(a, b) => {
                let inner = Self::branch(b, then, els.clone());
                Self::branch(a, inner, els)
            }
            CoreGuard::Or(a, b) => {
                let inner = Self::branch(b, then.clone(), els);
                Self::branch(a, then, inner)
            }
        }
    }

    pub fn loop_free(&self) -> bool {
        match self {
            CoreStmt::While { .. } => false,
            CoreStmt::IfLess { then, els, .. } => then.loop_free() && els.loop_free(),
            CoreStmt::PChoice { left, right, .. } => left.loop_free() && right.loop_free(),
            CoreStmt::Seq(items) => items.iter().all(CoreStmt::loop_free),
            _ => true,
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            CoreStmt::Skip => {}
            CoreStmt::AssignConst(x, _) | CoreStmt::Decr(x) => push_unique(out, x),
            CoreStmt::IidIncr { x, y, .. } | CoreStmt::SubVar(x, y) => {
                push_unique(out, x);
                push_unique(out, y);
            }
            CoreStmt::IfLess { var, then, els, .. } => {
                push_unique(out, var);
                then.vars(out);
                els.vars(out);
            }
            CoreStmt::PChoice { left, right, .. } => {
                left.vars(out);
                right.vars(out);
            }
            CoreStmt::Seq(items) => items.iter().for_each(|s| s.vars(out)),
            CoreStmt::While { guard, body, invariant, .. } => {
                guard.vars(out);
                body.vars(out);
                if let Some(i) = invariant {
                    i.vars(out);
                }
            }
        }
    }

    /// Loops in pre-order.
    pub fn loops(&self) -> Vec<&CoreStmt> {
        let mut out = Vec::new();
        self.collect_loops(&mut out);
        out
    }

    fn collect_loops<'a>(&'a self, out: &mut Vec<&'a CoreStmt>) {
        match self {
            CoreStmt::While { body, .. } => {
                out.push(self);
                body.collect_loops(out);
            }
            CoreStmt::IfLess { then, els, .. } => {
                then.collect_loops(out);
                els.collect_loops(out);
            }
            CoreStmt::PChoice { left, right, .. } => {
                left.collect_loops(out);
                right.collect_loops(out);
            }
            CoreStmt::Seq(items) => items.iter().for_each(|s| s.collect_loops(out)),
            _ => {}
        }
    }

    /// Number of statement nodes, a rough size measure.
    pub fn size(&self) -> usize {
        match self {
            CoreStmt::IfLess { then, els, .. } => 1 + then.size() + els.size(),
            CoreStmt::PChoice { left, right, .. } => 1 + left.size() + right.size(),
            CoreStmt::Seq(items) => items.iter().map(CoreStmt::size).sum(),
            CoreStmt::While { body, .. } => 1 + body.size(),
            _ => 1,
        }
    }
}

struct Desugarer {
    opts: DesugarOptions,
    depth: usize,
}

impl Desugarer {
    fn stmt(&mut self, s: &Stmt) -> CoreStmt {
        match s {
            Stmt::Skip => CoreStmt::Skip,
            Stmt::AssignConst(x, n) => CoreStmt::AssignConst(x.clone(), *n),
            Stmt::Decr(x) => CoreStmt::Decr(x.clone()),
            Stmt::IidIncr { x, dist, y } => CoreStmt::IidIncr { x: x.clone(), dist: dist.clone(), y: y.clone() },
            Stmt::SubVar(x, y) => CoreStmt::SubVar(x.clone(), y.clone()),
            Stmt::AssignVar(x, y) if x == y => CoreStmt::Skip,
            Stmt::AssignVar(x, y) => CoreStmt::seq(vec![CoreStmt::AssignConst(x.clone(), 0), copy_into(x, y)]),
            Stmt::IncrVar(x, y) => copy_into(x, y),
            Stmt::IncrConst(x, n) => self.incr_dist(x, &DistExpr::Dirac(*n)),
            Stmt::AssignDist(x, DistExpr::Dirac(n)) => CoreStmt::AssignConst(x.clone(), *n),
            Stmt::AssignDist(x, d) => self.assign_dist(x, d),
            Stmt::IncrDist(x, d) => self.incr_dist(x, d),
            Stmt::IfElse { guard, then, els } => {
                let g = CoreGuard::from_guard(guard);
                let t = self.stmt(then);
                let e = self.stmt(els);
                CoreStmt::branch(&g, t, e)
            }
            Stmt::Seq(items) => CoreStmt::seq(items.iter().map(|s| self.stmt(s)).collect()),
            Stmt::PChoice { left, prob, right } => self.choice(left, prob, right),
            Stmt::Switch { var, cases, default } => {
                let mut acc = default.as_ref().map(|d| self.stmt(d)).unwrap_or(CoreStmt::Skip);
                for (n, body) in cases.iter().rev() {
                    let g = CoreGuard::from_guard(&Guard::atom(var, Rel::Eq, *n));
                    let b = self.stmt(body);
                    acc = CoreStmt::branch(&g, b, acc);
                }
                acc
            }
            Stmt::Repeat { n, body } => {
                let b = self.stmt(body);
                CoreStmt::seq((0..*n).map(|_| b.clone()).collect())
            }
            Stmt::While { guard, body, invariant, pos } => CoreStmt::While {
                guard: CoreGuard::from_guard(guard),
                body: Box::new(self.stmt(body)),
                invariant: invariant.as_ref().map(|i| Box::new(self.stmt(i))),
                label: format!("loop at {pos}"),
            },
        }
    }

    fn assign_dist(&mut self, x: &str, d: &DistExpr) -> CoreStmt {
        match split_count(d) {
            Some((base, y)) if y == x => CoreStmt::seq(vec![
                CoreStmt::AssignConst(SCRATCH.into(), 0),
                CoreStmt::IidIncr { x: SCRATCH.into(), dist: base, y: x.to_string() },
                CoreStmt::AssignConst(x.to_string(), 0),
                copy_into(x, SCRATCH),
                CoreStmt::AssignConst(SCRATCH.into(), 0),
            ]),
            Some((base, y)) => CoreStmt::seq(vec![
                CoreStmt::AssignConst(x.to_string(), 0),
                CoreStmt::IidIncr { x: x.to_string(), dist: base, y },
            ]),
            None => CoreStmt::seq(vec![
                CoreStmt::AssignConst(SCRATCH.into(), 1),
                CoreStmt::AssignConst(x.to_string(), 0),
                CoreStmt::IidIncr { x: x.to_string(), dist: d.clone(), y: SCRATCH.into() },
                CoreStmt::AssignConst(SCRATCH.into(), 0),
            ]),
        }
    }

    fn incr_dist(&mut self, x: &str, d: &DistExpr) -> CoreStmt {
        match split_count(d) {
            Some((base, y)) if y == x => CoreStmt::seq(vec![
                CoreStmt::AssignConst(SCRATCH.into(), 0),
                CoreStmt::IidIncr { x: SCRATCH.into(), dist: base, y: x.to_string() },
                copy_into(x, SCRATCH),
                CoreStmt::AssignConst(SCRATCH.into(), 0),
            ]),
            Some((base, y)) => CoreStmt::IidIncr { x: x.to_string(), dist: base, y },
            None => CoreStmt::seq(vec![
                CoreStmt::AssignConst(SCRATCH.into(), 1),
                CoreStmt::IidIncr { x: x.to_string(), dist: d.clone(), y: SCRATCH.into() },
                CoreStmt::AssignConst(SCRATCH.into(), 0),
            ]),
        }
    }

    fn choice(&mut self, left: &Stmt, prob: &ProbExpr, right: &Stmt) -> CoreStmt {
        if !self.opts.choice_via_temp {
            let l = self.stmt(left);
            let r = self.stmt(right);
            return CoreStmt::PChoice { left: Box::new(l), prob: prob.clone(), right: Box::new(r) };
        }
        let c = format!("{TEMP_PREFIX}c{}", self.depth);
        self.depth += 1;
        let l = self.stmt(left);
        let r = self.stmt(right);
        self.depth -= 1;
        // the coin must be cleared before either branch runs, since a branch
        // may re-enter the same nesting depth inside a loop body
        let reset = CoreStmt::AssignConst(c.clone(), 0);
        let l = CoreStmt::seq(vec![reset.clone(), l]);
        let r = CoreStmt::seq(vec![reset, r]);
        CoreStmt::seq(vec![
            self.assign_dist(&c, &DistExpr::Bernoulli(prob.clone())),
            CoreStmt::if_less(&c, 1, r, l),
        ])
    }
}

fn copy_into(x: &str, y: &str) -> CoreStmt {
    CoreStmt::IidIncr { x: x.to_string(), dist: DistExpr::Dirac(1), y: y.to_string() }
}

/// Splits `binomial(p, y)` into `(bernoulli(p), y)` and `nbinomial(p, y)`
/// into `(geometric(p), y)` when the count is a variable.
fn split_count(d: &DistExpr) -> Option<(DistExpr, String)> {
    match d {
        DistExpr::Binomial(p, Count::Var(y)) => Some((DistExpr::Bernoulli(p.clone()), y.clone())),
        DistExpr::NBinomial(p, Count::Var(y)) => Some((DistExpr::Geometric(p.clone()), y.clone())),
        _ => None,
    }
}

pub fn desugar_stmt(s: &Stmt, opts: DesugarOptions) -> CoreStmt {
    Desugarer { opts, depth: 0 }.stmt(s)
}

/// Desugars a program body and its specification, if any.
pub fn desugar(p: &Program, opts: DesugarOptions) -> Result<(CoreStmt, Option<CoreStmt>), SyntaxError> {
    for v in &p.vars {
        if v.starts_with(TEMP_PREFIX) {
            return Err(SyntaxError::FreshVariableClash(v.clone()));
        }
    }
    let body = desugar_stmt(&p.body, opts);
    let spec = p.spec.as_ref().map(|s| desugar_stmt(s, opts));
    Ok((body, spec))
}

impl fmt::Display for CoreStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_core(&mut out, self, 0);
        f.write_str(out.trim_end())
    }
}

fn write_core(out: &mut String, s: &CoreStmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match s {
        CoreStmt::Skip => out.push_str(&format!("{pad}skip\n")),
        CoreStmt::AssignConst(x, n) => out.push_str(&format!("{pad}{x} := {n}\n")),
        CoreStmt::Decr(x) => out.push_str(&format!("{pad}{x} -= 1\n")),
        CoreStmt::IidIncr { x, dist, y } => out.push_str(&format!("{pad}{x} += iid({dist}, {y})\n")),
        CoreStmt::SubVar(x, y) => out.push_str(&format!("{pad}{x} -= {y}\n")),
        CoreStmt::IfLess { var, n, then, els } => {
            out.push_str(&format!("{pad}if ({var} < {n}) {{\n"));
            write_core(out, then, depth + 1);
            out.push_str(&format!("{pad}}} else {{\n"));
            write_core(out, els, depth + 1);
            out.push_str(&format!("{pad}}}\n"));
        }
        CoreStmt::PChoice { left, prob, right } => {
            out.push_str(&format!("{pad}{{\n"));
            write_core(out, left, depth + 1);
            out.push_str(&format!("{pad}}} [{prob}] {{\n"));
            write_core(out, right, depth + 1);
            out.push_str(&format!("{pad}}}\n"));
        }
        CoreStmt::Seq(items) => {
            for (k, it) in items.iter().enumerate() {
                write_core(out, it, depth);
                if k + 1 < items.len() && !out.ends_with("}\n") {
                    out.pop();
                    out.push_str(";\n");
                }
            }
        }
        CoreStmt::While { guard, body, invariant, .. } => {
            if let Some(i) = invariant {
                out.push_str(&format!("{pad}@invariant {{\n"));
                write_core(out, i, depth + 1);
                out.push_str(&format!("{pad}}}\n"));
            }
            out.push_str(&format!("{pad}while ({guard}) {{\n"));
            write_core(out, body, depth + 1);
            out.push_str(&format!("{pad}}}\n"));
        }
    }
}
