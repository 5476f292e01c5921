//! Surface syntax tree.

use std::fmt;

use crate::cas::Rational;

/// Source position. Positions never take part in equality, so a program and
/// its pretty-printed re-parse compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::hash::Hash for Pos {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Comparison operators allowed in guard atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    /// The relation seen from the other side: `n < x` is `x > n`.
    pub fn flip(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }

    pub fn holds(self, a: u64, b: u64) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
        }
    }
}

/// Rectangular guard: Boolean combination of variable-constant comparisons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    Const(bool),
    Atom { var: String, rel: Rel, n: u64 },
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn atom(var: &str, rel: Rel, n: u64) -> Guard {
        Guard::Atom { var: var.to_string(), rel, n }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    pub fn and(a: Guard, b: Guard) -> Guard {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        Guard::Or(Box::new(a), Box::new(b))
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Guard::Const(_) => {}
            Guard::Atom { var, .. } => push_unique(out, var),
            Guard::Not(g) => g.vars(out),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Evaluates on a concrete state given by a lookup function.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> u64) -> bool {
        match self {
            Guard::Const(b) => *b,
            Guard::Atom { var, rel, n } => rel.holds(lookup(var), *n),
            Guard::Not(g) => !g.eval(lookup),
            Guard::And(a, b) => a.eval(lookup) && b.eval(lookup),
            Guard::Or(a, b) => a.eval(lookup) || b.eval(lookup),
        }
    }
}

/// Rational expression over literals and declared parameters, used for
/// probabilities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProbExpr {
    Lit(Rational),
    Param(String),
    Neg(Box<ProbExpr>),
    Add(Box<ProbExpr>, Box<ProbExpr>),
    Sub(Box<ProbExpr>, Box<ProbExpr>),
    Mul(Box<ProbExpr>, Box<ProbExpr>),
    Div(Box<ProbExpr>, Box<ProbExpr>),
}

impl ProbExpr {
    pub fn lit(r: Rational) -> ProbExpr {
        ProbExpr::Lit(r)
    }

    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            ProbExpr::Lit(_) => {}
            ProbExpr::Param(p) => push_unique(out, p),
            ProbExpr::Neg(a) => a.params(out),
            ProbExpr::Add(a, b) | ProbExpr::Sub(a, b) | ProbExpr::Mul(a, b) | ProbExpr::Div(a, b) => {
                a.params(out);
                b.params(out);
            }
        }
    }

    pub fn as_literal(&self) -> Option<&Rational> {
        match self {
            ProbExpr::Lit(r) => Some(r),
            _ => None,
        }
    }
}

/// How many samples a distribution or `iid` draws: a literal or the current
/// value of a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Count {
    Lit(u64),
    Var(String),
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Lit(n) => write!(f, "{n}"),
            Count::Var(v) => write!(f, "{v}"),
        }
    }
}

/// Distributions with rational PGF.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DistExpr {
    Dirac(u64),
    Bernoulli(ProbExpr),
    /// Uniform on `{0, ..., n-1}`.
    Uniform(u64),
    /// Uniform on `{a, ..., b}`.
    UniformRange(u64, u64),
    Geometric(ProbExpr),
    Binomial(ProbExpr, Count),
    NBinomial(ProbExpr, Count),
}

impl DistExpr {
    /// The variable a binomial-type count refers to, if any.
    pub fn count_var(&self) -> Option<&str> {
        match self {
            DistExpr::Binomial(_, Count::Var(v)) | DistExpr::NBinomial(_, Count::Var(v)) => Some(v),
            _ => None,
        }
    }

    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            DistExpr::Bernoulli(p) | DistExpr::Geometric(p) | DistExpr::Binomial(p, _) | DistExpr::NBinomial(p, _) => {
                p.params(out)
            }
            _ => {}
        }
    }
}

/// Surface statements. Sequences are kept flat with at least two elements;
/// use [`Stmt::seq`] to build them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    /// `x := n`
    AssignConst(String, u64),
    /// `x -= 1`, monus.
    Decr(String),
    /// `x += iid(D, y)`
    IidIncr { x: String, dist: DistExpr, y: String },
    /// `x := y`
    AssignVar(String, String),
    /// `x += y`
    IncrVar(String, String),
    /// `x += n`
    IncrConst(String, u64),
    /// `x -= y`; must not go below zero.
    SubVar(String, String),
    /// `x := D`
    AssignDist(String, DistExpr),
    /// `x += D`
    IncrDist(String, DistExpr),
    IfElse { guard: Guard, then: Box<Stmt>, els: Box<Stmt> },
    Seq(Vec<Stmt>),
    PChoice { left: Box<Stmt>, prob: ProbExpr, right: Box<Stmt> },
    Switch { var: String, cases: Vec<(u64, Stmt)>, default: Option<Box<Stmt>> },
    Repeat { n: u64, body: Box<Stmt> },
    While { guard: Guard, body: Box<Stmt>, invariant: Option<Box<Stmt>>, pos: Pos },
}

impl Stmt {
    /// Sequential composition, flattening nested sequences and dropping
    /// `skip`.
    pub fn seq(items: Vec<Stmt>) -> Stmt {
        let mut out = Vec::new();
        for s in items {
            match s {
                Stmt::Skip => {}
                Stmt::Seq(inner) => out.extend(inner),
                s => out.push(s),
            }
        }
        match out.len() {
            0 => Stmt::Skip,
            1 => out.pop().expect("one element"),
            _ => Stmt::Seq(out),
        }
    }

    pub fn if_else(guard: Guard, then: Stmt, els: Stmt) -> Stmt {
        Stmt::IfElse { guard, then: Box::new(then), els: Box::new(els) }
    }

    pub fn pchoice(left: Stmt, prob: ProbExpr, right: Stmt) -> Stmt {
        Stmt::PChoice { left: Box::new(left), prob, right: Box::new(right) }
    }

    pub fn while_loop(guard: Guard, body: Stmt) -> Stmt {
        Stmt::While { guard, body: Box::new(body), invariant: None, pos: Pos::default() }
    }

    /// True iff no `while` occurs.
    pub fn loop_free(&self) -> bool {
        match self {
            Stmt::While { .. } => false,
            Stmt::IfElse { then, els, .. } => then.loop_free() && els.loop_free(),
            Stmt::Seq(v) => v.iter().all(Stmt::loop_free),
            Stmt::PChoice { left, right, .. } => left.loop_free() && right.loop_free(),
            Stmt::Switch { cases, default, .. } => {
                cases.iter().all(|(_, s)| s.loop_free()) && default.as_ref().is_none_or(|d| d.loop_free())
            }
            Stmt::Repeat { body, .. } => body.loop_free(),
            _ => true,
        }
    }

    /// Variables read or written, in order of first occurrence.
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Stmt::Skip => {}
            Stmt::AssignConst(x, _) | Stmt::Decr(x) | Stmt::IncrConst(x, _) => push_unique(out, x),
            Stmt::AssignVar(x, y) | Stmt::IncrVar(x, y) | Stmt::SubVar(x, y) => {
                push_unique(out, x);
                push_unique(out, y);
            }
            Stmt::IidIncr { x, dist, y } => {
                push_unique(out, x);
                if let Some(v) = dist.count_var() {
                    push_unique(out, v);
                }
                push_unique(out, y);
            }
            Stmt::AssignDist(x, d) | Stmt::IncrDist(x, d) => {
                push_unique(out, x);
                if let Some(v) = d.count_var() {
                    push_unique(out, v);
                }
            }
            Stmt::IfElse { guard, then, els } => {
                guard.vars(out);
                then.vars(out);
                els.vars(out);
            }
            Stmt::Seq(v) => v.iter().for_each(|s| s.vars(out)),
            Stmt::PChoice { left, right, .. } => {
                left.vars(out);
                right.vars(out);
            }
            Stmt::Switch { var, cases, default } => {
                push_unique(out, var);
                cases.iter().for_each(|(_, s)| s.vars(out));
                if let Some(d) = default {
                    d.vars(out);
                }
            }
            Stmt::Repeat { body, .. } => body.vars(out),
            Stmt::While { guard, body, invariant, .. } => {
                guard.vars(out);
                body.vars(out);
                if let Some(i) = invariant {
                    i.vars(out);
                }
            }
        }
    }

    /// Parameters mentioned in probabilities.
    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Stmt::IidIncr { dist, .. } | Stmt::AssignDist(_, dist) | Stmt::IncrDist(_, dist) => dist.params(out),
            Stmt::IfElse { then, els, .. } => {
                then.params(out);
                els.params(out);
            }
            Stmt::Seq(v) => v.iter().for_each(|s| s.params(out)),
            Stmt::PChoice { left, prob, right } => {
                prob.params(out);
                left.params(out);
                right.params(out);
            }
            Stmt::Switch { cases, default, .. } => {
                cases.iter().for_each(|(_, s)| s.params(out));
                if let Some(d) = default {
                    d.params(out);
                }
            }
            Stmt::Repeat { body, .. } => body.params(out),
            Stmt::While { body, invariant, .. } => {
                body.params(out);
                if let Some(i) = invariant {
                    i.params(out);
                }
            }
            _ => {}
        }
    }

    /// Every `while` in pre-order.
    pub fn loops(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        self.collect_loops(&mut out);
        out
    }

    fn collect_loops<'a>(&'a self, out: &mut Vec<&'a Stmt>) {
        match self {
            Stmt::While { body, .. } => {
                out.push(self);
                body.collect_loops(out);
            }
            Stmt::IfElse { then, els, .. } => {
                then.collect_loops(out);
                els.collect_loops(out);
            }
            Stmt::Seq(v) => v.iter().for_each(|s| s.collect_loops(out)),
            Stmt::PChoice { left, right, .. } => {
                left.collect_loops(out);
                right.collect_loops(out);
            }
            Stmt::Switch { cases, default, .. } => {
                cases.iter().for_each(|(_, s)| s.collect_loops(out));
                if let Some(d) = default {
                    d.collect_loops(out);
                }
            }
            Stmt::Repeat { body, .. } => body.collect_loops(out),
            _ => {}
        }
    }
}

pub(crate) fn push_unique(out: &mut Vec<String>, v: &str) {
    if !out.iter().any(|w| w == v) {
        out.push(v.to_string());
    }
}

/// A parsed program: declarations, body and an optional loop-free
/// specification from the `#invariant` section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub params: Vec<String>,
    pub vars: Vec<String>,
    pub body: Stmt,
    pub spec: Option<Stmt>,
}

impl Program {
    pub fn new(vars: &[&str], body: Stmt) -> Program {
        Program { params: Vec::new(), vars: vars.iter().map(|s| s.to_string()).collect(), body, spec: None }
    }

    pub fn loop_free(&self) -> bool {
        self.body.loop_free()
    }
}
