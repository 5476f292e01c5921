//! Pretty printing. Output re-parses to an equal syntax tree.

use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::ast::{DistExpr, Guard, ProbExpr, Program, Stmt};
use crate::cas::render_rational;

fn prec(e: &ProbExpr) -> u8 {
    match e {
        ProbExpr::Add(..) | ProbExpr::Sub(..) => 1,
        ProbExpr::Mul(..) | ProbExpr::Div(..) => 2,
        ProbExpr::Neg(..) => 3,
        ProbExpr::Lit(r) if r.is_negative() || !r.denom().is_one() => 2,
        _ => 4,
    }
}

fn prob_child(f: &mut fmt::Formatter<'_>, e: &ProbExpr, min: u8) -> fmt::Result {
    // a fractional literal is itself a quotient and must stay grouped
    let grouped_lit = matches!(e, ProbExpr::Lit(r) if r.is_negative() || !r.denom().is_one());
    if prec(e) < min || grouped_lit {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ProbExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbExpr::Lit(r) => write!(f, "{}", render_rational(r)),
            ProbExpr::Param(p) => write!(f, "{p}"),
            ProbExpr::Neg(a) => {
                write!(f, "-")?;
                prob_child(f, a, 4)
            }
            ProbExpr::Add(a, b) | ProbExpr::Sub(a, b) => {
                prob_child(f, a, 1)?;
                write!(f, "{}", if matches!(self, ProbExpr::Add(..)) { " + " } else { " - " })?;
                prob_child(f, b, 2)
            }
            ProbExpr::Mul(a, b) | ProbExpr::Div(a, b) => {
                prob_child(f, a, 2)?;
                write!(f, "{}", if matches!(self, ProbExpr::Mul(..)) { "*" } else { "/" })?;
                prob_child(f, b, 3)
            }
        }
    }
}

impl fmt::Display for DistExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistExpr::Dirac(n) => write!(f, "dirac({n})"),
            DistExpr::Bernoulli(p) => write!(f, "bernoulli({p})"),
            DistExpr::Uniform(n) => write!(f, "unif({n})"),
            DistExpr::UniformRange(a, b) => write!(f, "unif({a}, {b})"),
            DistExpr::Geometric(p) => write!(f, "geometric({p})"),
            DistExpr::Binomial(p, n) => write!(f, "binomial({p}, {n})"),
            DistExpr::NBinomial(p, n) => write!(f, "nbinomial({p}, {n})"),
        }
    }
}

fn guard_child(f: &mut fmt::Formatter<'_>, g: &Guard, parent: &Guard, right: bool) -> fmt::Result {
    let needs = match (parent, g) {
        (Guard::And(..), Guard::Or(..)) => true,
        (Guard::And(..), Guard::And(..)) | (Guard::Or(..), Guard::Or(..)) => right,
        _ => false,
    };
    if needs {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Const(b) => write!(f, "{b}"),
            Guard::Atom { var, rel, n } => write!(f, "{var} {} {n}", rel.symbol()),
            Guard::Not(g) => match g.as_ref() {
                Guard::Not(_) | Guard::Const(_) => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Guard::And(a, b) => {
                guard_child(f, a, self, false)?;
                write!(f, " && ")?;
                guard_child(f, b, self, true)
            }
            Guard::Or(a, b) => {
                guard_child(f, a, self, false)?;
                write!(f, " || ")?;
                guard_child(f, b, self, true)
            }
        }
    }
}

struct Printer {
    out: String,
}

impl Printer {
    fn line(&mut self, depth: usize, s: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        match s {
            Stmt::Seq(items) => {
                for (k, it) in items.iter().enumerate() {
                    self.stmt(it, depth);
                    if k + 1 < items.len() {
                        self.terminate();
                    }
                }
            }
            Stmt::IfElse { guard, then, els } => {
                self.line(depth, &format!("if ({guard}) {{"));
                self.stmt(then, depth + 1);
                if matches!(els.as_ref(), Stmt::Skip) {
                    self.line(depth, "}");
                } else {
                    self.line(depth, "} else {");
                    self.stmt(els, depth + 1);
                    self.line(depth, "}");
                }
            }
            Stmt::PChoice { left, prob, right } => {
                self.line(depth, "{");
                self.stmt(left, depth + 1);
                self.line(depth, &format!("}} [{prob}] {{"));
                self.stmt(right, depth + 1);
                self.line(depth, "}");
            }
            Stmt::Switch { var, cases, default } => {
                self.line(depth, &format!("switch ({var}) {{"));
                for (n, body) in cases {
                    self.line(depth + 1, &format!("case {n}:"));
                    self.stmt(body, depth + 2);
                    self.terminate();
                    self.line(depth + 2, "break;");
                }
                if let Some(d) = default {
                    self.line(depth + 1, "default:");
                    self.stmt(d, depth + 2);
                    self.terminate();
                }
                self.line(depth, "}");
            }
            Stmt::Repeat { n, body } => {
                self.line(depth, &format!("repeat {n} times {{"));
                self.stmt(body, depth + 1);
                self.line(depth, "}");
            }
            Stmt::While { guard, body, invariant, .. } => {
                if let Some(inv) = invariant {
                    self.line(depth, "@invariant {");
                    self.stmt(inv, depth + 1);
                    self.line(depth, "}");
                }
                self.line(depth, &format!("while ({guard}) {{"));
                self.stmt(body, depth + 1);
                self.line(depth, "}");
            }
            simple => {
                let text = simple_stmt(simple);
                self.line(depth, &text);
            }
        }
    }

    /// Appends `;` to the last printed line unless it closes a block.
    fn terminate(&mut self) {
        if self.out.ends_with("}\n") || self.out.ends_with(";\n") {
            return;
        }
        if self.out.ends_with('\n') {
            self.out.pop();
            self.out.push_str(";\n");
        }
    }
}

fn simple_stmt(s: &Stmt) -> String {
    match s {
        Stmt::Skip => "skip".into(),
        Stmt::AssignConst(x, n) => format!("{x} := {n}"),
        Stmt::Decr(x) => format!("{x} -= 1"),
        Stmt::IidIncr { x, dist, y } => format!("{x} += iid({dist}, {y})"),
        Stmt::AssignVar(x, y) => format!("{x} := {y}"),
        Stmt::IncrVar(x, y) => format!("{x} += {y}"),
        Stmt::IncrConst(x, n) => format!("{x} += {n}"),
        Stmt::SubVar(x, y) => format!("{x} -= {y}"),
        Stmt::AssignDist(x, d) => format!("{x} := {d}"),
        Stmt::IncrDist(x, d) => format!("{x} += {d}"),
        _ => unreachable!("compound statement"),
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer { out: String::new() };
        p.stmt(self, 0);
        f.write_str(p.out.trim_end())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if !self.params.is_empty() {
            writeln!(out, "params {};", self.params.join(", "))?;
        }
        if !self.vars.is_empty() {
            writeln!(out, "vars {};", self.vars.join(", "))?;
        }
        writeln!(out, "{}", self.body)?;
        if let Some(spec) = &self.spec {
            writeln!(out, "#invariant")?;
            writeln!(out, "{spec}")?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    #[test]
    fn roundtrip_of_nested_program() {
        let src = "params a, b;
            vars c, t;
            @invariant { if (c = 1 && t <= 1) { c := 0; if (t = 0) { t := bernoulli((1 - a)*b/(a + b - a*b)) } else { t := bernoulli(b/(a + b - a*b)) } } }
            while (c = 1 && t <= 1) {
              if (t = 0) { {c := 0}[a]{t := 1} } else { {c := 0}[b]{t := 0} }
            }";
        let p = parse(src).unwrap();
        let q = parse(&p.to_string()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn roundtrip_of_probabilities_and_guards() {
        let src = "params a; vars x, y;
            {x := 1}[a*(1/3)]{ {y := 2}[-a + 1]{skip} };
            if (!(x < 2) || (x > 3 && y = 1) || y != 0) { x += iid(binomial(1/2, 3), y) };
            switch (x) { case 0: y := x; break; default: y -= x };
            repeat 2 times { x := nbinomial(a/2, y) }";
        let p = parse(src).unwrap();
        let text = p.to_string();
        assert_eq!(parse(&text).unwrap(), p, "{text}");
    }
}
