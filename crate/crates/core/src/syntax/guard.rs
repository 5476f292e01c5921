//! Guards normalised to half-open intervals over single variables.

use std::fmt;

use super::ast::{push_unique, Guard, Rel};

/// A guard after normalisation: every atom is `lo <= var < hi` (with `hi`
/// absent meaning unbounded).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoreGuard {
    Const(bool),
    In { var: String, lo: u64, hi: Option<u64> },
    Not(Box<CoreGuard>),
    And(Box<CoreGuard>, Box<CoreGuard>),
    Or(Box<CoreGuard>, Box<CoreGuard>),
}

impl CoreGuard {
    pub fn less(var: &str, n: u64) -> CoreGuard {
        CoreGuard::In { var: var.to_string(), lo: 0, hi: Some(n) }.simplify()
    }

    fn interval(var: &str, lo: u64, hi: Option<u64>) -> CoreGuard {
        match hi {
            Some(h) if h <= lo => CoreGuard::Const(false),
            None if lo == 0 => CoreGuard::Const(true),
            _ => CoreGuard::In { var: var.to_string(), lo, hi },
        }
    }

    pub fn from_guard(g: &Guard) -> CoreGuard {
        let raw = match g {
            Guard::Const(b) => CoreGuard::Const(*b),
            Guard::Atom { var, rel, n } => {
                let n = *n;
                match rel {
                    Rel::Lt => Self::interval(var, 0, Some(n)),
                    Rel::Le => Self::interval(var, 0, Some(n + 1)),
                    Rel::Eq => Self::interval(var, n, Some(n + 1)),
                    Rel::Ne => CoreGuard::Not(Box::new(Self::interval(var, n, Some(n + 1)))),
                    Rel::Gt => Self::interval(var, n + 1, None),
                    Rel::Ge => Self::interval(var, n, None),
                }
            }
            Guard::Not(a) => CoreGuard::Not(Box::new(Self::from_guard(a))),
            Guard::And(a, b) => CoreGuard::And(Box::new(Self::from_guard(a)), Box::new(Self::from_guard(b))),
            Guard::Or(a, b) => CoreGuard::Or(Box::new(Self::from_guard(a)), Box::new(Self::from_guard(b))),
        };
        raw.simplify()
    }

    /// Folds constants and intersects conjunctions of intervals over the same
    /// variable.
    pub fn simplify(self) -> CoreGuard {
        match self {
            CoreGuard::In { var, lo, hi } => Self::interval(&var, lo, hi),
            CoreGuard::Not(a) => match a.simplify() {
                CoreGuard::Const(b) => CoreGuard::Const(!b),
                CoreGuard::Not(inner) => *inner,
                a => CoreGuard::Not(Box::new(a)),
            },
            CoreGuard::Or(a, b) => match (a.simplify(), b.simplify()) {
                (CoreGuard::Const(true), _) | (_, CoreGuard::Const(true)) => CoreGuard::Const(true),
                (CoreGuard::Const(false), g) | (g, CoreGuard::Const(false)) => g,
                (a, b) => CoreGuard::Or(Box::new(a), Box::new(b)),
            },
            CoreGuard::And(a, b) => {
                let mut conj = Vec::new();
                a.simplify().conjuncts(&mut conj);
                b.simplify().conjuncts(&mut conj);
                let mut merged: Vec<CoreGuard> = Vec::new();
                for g in conj {
                    match g {
                        CoreGuard::Const(true) => {}
                        CoreGuard::Const(false) => return CoreGuard::Const(false),
                        CoreGuard::In { var, lo, hi } => {
                            let slot = merged.iter_mut().find(|m| matches!(m, CoreGuard::In { var: v, .. } if *v == var));
                            match slot {
                                Some(CoreGuard::In { lo: l2, hi: h2, .. }) => {
                                    *l2 = (*l2).max(lo);
                                    *h2 = match (*h2, hi) {
                                        (Some(a), Some(b)) => Some(a.min(b)),
                                        (a, b) => a.or(b),
                                    };
                                    if matches!(*h2, Some(h) if h <= *l2) {
                                        return CoreGuard::Const(false);
                                    }
                                }
                                _ => merged.push(CoreGuard::In { var, lo, hi }),
                            }
                        }
                        g => merged.push(g),
                    }
                }
                merged
                    .into_iter()
                    .map(|g| g.simplify_leaf())
                    .reduce(|a, b| CoreGuard::And(Box::new(a), Box::new(b)))
                    .unwrap_or(CoreGuard::Const(true))
            }
            g => g,
        }
    }

    fn simplify_leaf(self) -> CoreGuard {
        match self {
            CoreGuard::In { var, lo, hi } => Self::interval(&var, lo, hi),
            g => g,
        }
    }

    fn conjuncts(self, out: &mut Vec<CoreGuard>) {
        match self {
            CoreGuard::And(a, b) => {
                a.conjuncts(out);
                b.conjuncts(out);
            }
            g => out.push(g),
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            CoreGuard::Const(_) => {}
            CoreGuard::In { var, .. } => push_unique(out, var),
            CoreGuard::Not(a) => a.vars(out),
            CoreGuard::And(a, b) | CoreGuard::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> u64) -> bool {
        match self {
            CoreGuard::Const(b) => *b,
            CoreGuard::In { var, lo, hi } => {
                let v = lookup(var);
                v >= *lo && hi.is_none_or(|h| v < h)
            }
            CoreGuard::Not(a) => !a.eval(lookup),
            CoreGuard::And(a, b) => a.eval(lookup) && b.eval(lookup),
            CoreGuard::Or(a, b) => a.eval(lookup) || b.eval(lookup),
        }
    }
}

impl fmt::Display for CoreGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreGuard::Const(b) => write!(f, "{b}"),
            CoreGuard::In { var, lo, hi: None } => write!(f, "{var} >= {lo}"),
            CoreGuard::In { var, lo: 0, hi: Some(h) } => write!(f, "{var} < {h}"),
            CoreGuard::In { var, lo, hi: Some(h) } if *h == lo + 1 => write!(f, "{var} = {lo}"),
            CoreGuard::In { var, lo, hi: Some(h) } => write!(f, "{lo} <= {var} < {h}"),
            CoreGuard::Not(a) => write!(f, "!({a})"),
            CoreGuard::And(a, b) => write!(f, "({a} && {b})"),
            CoreGuard::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}
