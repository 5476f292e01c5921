//! Recursive-descent parser for program files.

use num_traits::{Signed, ToPrimitive, Zero};

use super::ast::{push_unique, Count, DistExpr, Guard, Pos, ProbExpr, Program, Rel, Stmt};
use super::lexer::{lex, Tok, Token};
use super::SyntaxError;

const KEYWORDS: &[&str] = &[
    "skip", "while", "if", "else", "switch", "case", "default", "break", "repeat", "times", "iid", "params", "vars",
    "true", "false", "and", "or", "not",
];

const DISTRIBUTIONS: &[&str] = &[
    "dirac", "bernoulli", "unif", "uniform", "geometric", "binomial", "nbinomial", "negbinomial", "catalan",
];

/// Longest run of decrements a single `x := x - n` may expand to.
const MAX_UNROLLED_DECREMENTS: i64 = 10_000;

/// Parses a complete program file. A line starting with `#invariant` ends
/// the program body; the remaining text is the loop-free specification.
pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let (body_src, spec_src, spec_line) = split_sections(src);
    let mut p = Parser::new(tokens(body_src, 1)?);
    p.headers()?;
    let body = p.program_body()?;
    let spec = match spec_src {
        Some(s) => {
            let mut q = Parser::new(tokens(s, spec_line)?);
            q.decl_vars = p.decl_vars.clone();
            q.params = p.params.clone();
            q.headers_extend()?;
            let spec = q.program_body()?;
            p.merge_from(&q);
            Some(spec)
        }
        None => None,
    };
    Ok(p.finish(body, spec))
}

/// Parses a specification file against the declarations of `base`. The
/// file may add declarations of its own.
pub fn parse_spec(src: &str, base: &Program) -> Result<Program, SyntaxError> {
    let (body_src, _, _) = split_sections(src);
    let mut p = Parser::new(tokens(body_src, 1)?);
    p.params = base.params.clone();
    p.seen_vars = base.vars.clone();
    p.decl_vars = Some(base.vars.clone());
    let had_vars_header = p.headers_extend()?;
    if !had_vars_header {
        p.decl_vars = None;
    }
    let spec = p.program_body()?;
    let mut out = base.clone();
    for v in &p.seen_vars {
        push_unique(&mut out.vars, v);
    }
    for v in p.decl_vars.iter().flatten() {
        push_unique(&mut out.vars, v);
    }
    for q in &p.params {
        push_unique(&mut out.params, q);
    }
    out.spec = Some(spec);
    Ok(out)
}

/// Parses a guard over the given variables, for query strings.
pub fn parse_guard(src: &str, vars: &[String]) -> Result<Guard, SyntaxError> {
    let mut p = Parser::new(tokens(src, 1)?);
    p.decl_vars = Some(vars.to_vec());
    let g = p.guard()?;
    p.expect_end()?;
    Ok(g)
}

/// Parses a single distribution expression such as `geometric(1/2)`.
pub fn parse_dist(src: &str, params: &[String]) -> Result<DistExpr, SyntaxError> {
    let mut p = Parser::new(tokens(src, 1)?);
    p.params = params.to_vec();
    let name = match p.next_tok() {
        Some(Token { tok: Tok::Ident(n), pos }) => (n, pos),
        Some(t) => return Err(SyntaxError::Parse { pos: t.pos, msg: "expected a distribution".into() }),
        None => return Err(SyntaxError::Parse { pos: p.end_pos(), msg: "expected a distribution".into() }),
    };
    let d = p.dist_call(&name.0, name.1)?;
    p.expect_end()?;
    Ok(d)
}

/// Lexes `src`, rejecting distributions without a rational generating
/// function wherever they occur.
fn tokens(src: &str, first_line: usize) -> Result<Vec<Token>, SyntaxError> {
    let toks = lex(src, first_line)?;
    if let Some(t) = toks.iter().find(|t| t.tok == Tok::Ident("catalan".into())) {
        return Err(SyntaxError::AlgebraicUnsupported { name: "catalan".into(), pos: t.pos });
    }
    Ok(toks)
}

fn split_sections(src: &str) -> (&str, Option<&str>, usize) {
    let mut offset = 0;
    for (i, line) in src.split_inclusive('\n').enumerate() {
        if line.trim_start().starts_with("#invariant") {
            let rest = &src[offset + line.len()..];
            return (&src[..offset], Some(rest), i + 2);
        }
        offset += line.len();
    }
    (src, None, 1)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    params: Vec<String>,
    /// Declared variables, when a `vars` header is present.
    decl_vars: Option<Vec<String>>,
    /// Variables in order of first use.
    seen_vars: Vec<String>,
}

/// Affine right-hand side: variable coefficients and a constant.
struct Affine {
    coeffs: Vec<(String, i64)>,
    konst: i64,
}

impl Affine {
    fn add_var(&mut self, v: &str, c: i64) {
        match self.coeffs.iter_mut().find(|(w, _)| w == v) {
            Some((_, k)) => *k += c,
            None => self.coeffs.push((v.to_string(), c)),
        }
    }

    fn take(&mut self, v: &str) -> i64 {
        match self.coeffs.iter().position(|(w, _)| w == v) {
            Some(i) => self.coeffs.remove(i).1,
            None => 0,
        }
    }
}

enum Rhs {
    Dist(DistExpr),
    Iid(DistExpr, u64, String),
    Affine(Affine),
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Self { toks, i: 0, params: Vec::new(), decl_vars: None, seen_vars: Vec::new() }
    }

    fn merge_from(&mut self, other: &Parser) {
        for v in &other.seen_vars {
            push_unique(&mut self.seen_vars, v);
        }
        if other.decl_vars.is_some() {
            self.decl_vars = other.decl_vars.clone();
        }
        for q in &other.params {
            push_unique(&mut self.params, q);
        }
    }

    fn finish(self, body: Stmt, spec: Option<Stmt>) -> Program {
        let vars = match self.decl_vars {
            Some(v) => v,
            None => self.seen_vars,
        };
        Program { params: self.params, vars, body, spec }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or_else(|| self.end_pos())
    }

    fn end_pos(&self) -> Pos {
        self.toks.last().map(|t| Pos { line: t.pos.line, col: t.pos.col + 1 }).unwrap_or(Pos { line: 1, col: 1 })
    }

    fn next_tok(&mut self) -> Option<Token> {
        let t = self.toks.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.peek().is_some() {
            self.err("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(name)) if !KEYWORDS.contains(&name.as_str()) => {
                let name = name.clone();
                let pos = self.pos();
                self.i += 1;
                Ok((name, pos))
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn nat(&mut self) -> Result<u64, SyntaxError> {
        match self.peek() {
            Some(Tok::Num(r)) if r.is_integer() && !r.is_negative() => {
                let v = r.to_integer().to_u64();
                match v {
                    Some(v) => {
                        self.i += 1;
                        Ok(v)
                    }
                    None => self.err("natural number out of range"),
                }
            }
            _ => self.err("expected a natural number"),
        }
    }

    /// Reads the `params` and `vars` headers. Returns whether a `vars` header
    /// was present.
    fn headers(&mut self) -> Result<bool, SyntaxError> {
        self.headers_impl(false)
    }

    fn headers_extend(&mut self) -> Result<bool, SyntaxError> {
        self.headers_impl(true)
    }

    fn headers_impl(&mut self, extend: bool) -> Result<bool, SyntaxError> {
        let mut had_vars = false;
        loop {
            let is_params = self.is_kw("params");
            let is_vars = self.is_kw("vars");
            if !is_params && !is_vars {
                return Ok(had_vars);
            }
            self.i += 1;
            let mut names = Vec::new();
            loop {
                let (n, pos) = self.ident()?;
                check_name(&n, pos)?;
                names.push((n, pos));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(";")?;
            for (n, pos) in names {
                let clash = |list: &[String]| list.iter().any(|m| m.to_uppercase() == n.to_uppercase());
                if is_params {
                    if extend && self.params.contains(&n) {
                        continue;
                    }
                    if clash(&self.params) || self.decl_vars.as_deref().is_some_and(clash) {
                        return Err(SyntaxError::NameClash { name: n, pos });
                    }
                    self.params.push(n);
                } else {
                    had_vars = true;
                    let list = self.decl_vars.get_or_insert_with(Vec::new);
                    if list.contains(&n) {
                        if extend {
                            continue;
                        }
                        return Err(SyntaxError::NameClash { name: n, pos });
                    }
                    if list.iter().any(|m| m.to_uppercase() == n.to_uppercase()) || self.params.contains(&n) {
                        return Err(SyntaxError::NameClash { name: n, pos });
                    }
                    list.push(n);
                }
            }
        }
    }

    fn program_body(&mut self) -> Result<Stmt, SyntaxError> {
        if self.peek().is_none() {
            return self.err("empty program");
        }
        let s = self.stmts()?;
        self.expect_end()?;
        Ok(s)
    }

    fn use_var(&mut self, name: &str, pos: Pos) -> Result<(), SyntaxError> {
        if self.params.iter().any(|p| p == name) {
            return Err(SyntaxError::Parse { pos, msg: format!("parameter {name} used as a variable") });
        }
        match &self.decl_vars {
            Some(v) if !v.iter().any(|w| w == name) => {
                Err(SyntaxError::UndeclaredVariable { name: name.to_string(), pos })
            }
            _ => {
                if self.decl_vars.is_none() {
                    check_name(name, pos)?;
                }
                push_unique(&mut self.seen_vars, name);
                Ok(())
            }
        }
    }

    fn var(&mut self) -> Result<String, SyntaxError> {
        let (n, pos) = self.ident()?;
        self.use_var(&n, pos)?;
        Ok(n)
    }

    fn at_stmts_end(&self) -> bool {
        match self.peek() {
            None => true,
            Some(Tok::Sym("}")) => true,
            Some(Tok::Ident(k)) => k == "case" || k == "default" || k == "break",
            _ => false,
        }
    }

    fn stmts(&mut self) -> Result<Stmt, SyntaxError> {
        let mut items = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.at_stmts_end() {
                break;
            }
            items.push(self.stmt()?);
            let after_block = matches!(self.toks.get(self.i.wrapping_sub(1)).map(|t| &t.tok), Some(Tok::Sym("}")));
            if self.eat_sym(";") || after_block {
                continue;
            }
            break;
        }
        Ok(Stmt::seq(items))
    }

    fn block(&mut self) -> Result<Stmt, SyntaxError> {
        self.expect_sym("{")?;
        let s = self.stmts()?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::At(name)) => {
                if name != "invariant" {
                    return self.err(format!("unknown annotation @{name}"));
                }
                self.i += 1;
                let inv = self.block()?;
                if !self.is_kw("while") {
                    return self.err("@invariant must precede a while loop");
                }
                match self.stmt()? {
                    Stmt::While { guard, body, pos, .. } => {
                        Ok(Stmt::While { guard, body, invariant: Some(Box::new(inv)), pos })
                    }
                    _ => unreachable!("while statement expected"),
                }
            }
            Some(Tok::Sym("{")) => {
                let left = self.block()?;
                if !self.eat_sym("[") {
                    return Ok(left);
                }
                let prob = self.prob_expr()?;
                self.expect_sym("]")?;
                let right = self.block()?;
                Ok(Stmt::pchoice(left, prob, right))
            }
            Some(Tok::Ident(k)) => match k.as_str() {
                "skip" => {
                    self.i += 1;
                    Ok(Stmt::Skip)
                }
                "while" => {
                    self.i += 1;
                    let guard = self.guard()?;
                    let body = self.block()?;
                    Ok(Stmt::While { guard, body: Box::new(body), invariant: None, pos })
                }
                "if" => self.if_stmt(),
                "switch" => self.switch_stmt(),
                "repeat" => {
                    self.i += 1;
                    let n = self.nat()?;
                    self.eat_kw("times");
                    let body = self.block()?;
                    Ok(Stmt::Repeat { n, body: Box::new(body) })
                }
                _ if KEYWORDS.contains(&k.as_str()) => self.err(format!("unexpected keyword {k}")),
                _ => self.update(),
            },
            _ => self.err("expected a statement"),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        self.i += 1;
        let guard = self.guard()?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.is_kw("if") {
                self.if_stmt()?
            } else {
                self.block()?
            }
        } else {
            Stmt::Skip
        };
        Ok(Stmt::if_else(guard, then, els))
    }

    fn switch_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        self.i += 1;
        let paren = self.eat_sym("(");
        let var = self.var()?;
        if paren {
            self.expect_sym(")")?;
        }
        self.expect_sym("{")?;
        let mut cases: Vec<(u64, Stmt)> = Vec::new();
        let mut default = None;
        loop {
            if self.eat_kw("case") {
                let pos = self.pos();
                let n = self.nat()?;
                if cases.iter().any(|(m, _)| *m == n) {
                    return Err(SyntaxError::Parse { pos, msg: format!("duplicate case {n}") });
                }
                self.expect_sym(":")?;
                let body = self.case_body()?;
                cases.push((n, body));
            } else if self.eat_kw("default") {
                if default.is_some() {
                    return self.err("duplicate default");
                }
                self.expect_sym(":")?;
                default = Some(Box::new(self.case_body()?));
            } else {
                self.expect_sym("}")?;
                break;
            }
        }
        Ok(Stmt::Switch { var, cases, default })
    }

    fn case_body(&mut self) -> Result<Stmt, SyntaxError> {
        let body = self.stmts()?;
        if self.eat_kw("break") {
            self.eat_sym(";");
        }
        Ok(body)
    }

    fn update(&mut self) -> Result<Stmt, SyntaxError> {
        let (x, pos) = self.ident()?;
        self.use_var(&x, pos)?;
        let op = match self.peek() {
            Some(Tok::Sym(s)) => *s,
            _ => return self.err("expected ':=', '+=', '-=', '++' or '--'"),
        };
        self.i += 1;
        match op {
            "++" => Ok(Stmt::IncrConst(x, 1)),
            "--" => Ok(Stmt::Decr(x)),
            ":=" | "+=" | "-=" => {
                let rhs_pos = self.pos();
                let rhs = self.rhs()?;
                self.lower(x, op, rhs, rhs_pos)
            }
            _ => {
                self.i -= 1;
                self.err("expected ':=', '+=', '-=', '++' or '--'")
            }
        }
    }

    fn rhs(&mut self) -> Result<Rhs, SyntaxError> {
        if let (Some(Tok::Ident(name)), Some(Tok::Sym("("))) = (self.peek().cloned(), self.peek_at(1)) {
            let pos = self.pos();
            if name == "iid" {
                self.i += 2;
                let (dname, dpos) = self.ident_any()?;
                let d = self.dist_call(&dname, dpos)?;
                self.expect_sym(",")?;
                let mut k = 1;
                if let Some(Tok::Num(_)) = self.peek() {
                    k = self.nat()?;
                    self.eat_sym("*");
                }
                let y = self.var()?;
                self.expect_sym(")")?;
                return Ok(Rhs::Iid(d, k, y));
            }
            if DISTRIBUTIONS.contains(&name.as_str()) {
                self.i += 1;
                return Ok(Rhs::Dist(self.dist_call(&name, pos)?));
            }
            return Err(SyntaxError::Parse { pos, msg: format!("unknown distribution {name}") });
        }
        Ok(Rhs::Affine(self.affine()?))
    }

    fn ident_any(&mut self) -> Result<(String, Pos), SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                let pos = self.pos();
                self.i += 1;
                Ok((name, pos))
            }
            _ => self.err("expected a distribution"),
        }
    }

    /// Parses `name(args)` after the name has been consumed.
    fn dist_call(&mut self, name: &str, pos: Pos) -> Result<DistExpr, SyntaxError> {
        if name == "catalan" {
            return Err(SyntaxError::AlgebraicUnsupported { name: name.into(), pos });
        }
        if !DISTRIBUTIONS.contains(&name) {
            return Err(SyntaxError::Parse { pos, msg: format!("unknown distribution {name}") });
        }
        self.expect_sym("(")?;
        let d = match name {
            "dirac" => DistExpr::Dirac(self.nat()?),
            "bernoulli" => DistExpr::Bernoulli(self.prob_expr()?),
            "geometric" => DistExpr::Geometric(self.prob_expr()?),
            "unif" | "uniform" => {
                let a = self.nat()?;
                if self.eat_sym(",") {
                    let bpos = self.pos();
                    let b = self.nat()?;
                    if a > b {
                        return Err(SyntaxError::Parse { pos: bpos, msg: format!("empty range unif({a}, {b})") });
                    }
                    DistExpr::UniformRange(a, b)
                } else {
                    if a == 0 {
                        return Err(SyntaxError::Parse { pos, msg: "unif(0) is empty".into() });
                    }
                    DistExpr::Uniform(a)
                }
            }
            "binomial" | "nbinomial" | "negbinomial" => {
                let p = self.prob_expr()?;
                self.expect_sym(",")?;
                let count = match self.peek() {
                    Some(Tok::Num(_)) => Count::Lit(self.nat()?),
                    _ => Count::Var(self.var()?),
                };
                if name == "binomial" {
                    DistExpr::Binomial(p, count)
                } else {
                    DistExpr::NBinomial(p, count)
                }
            }
            _ => unreachable!("checked against the distribution list"),
        };
        self.expect_sym(")")?;
        Ok(d)
    }

    fn affine(&mut self) -> Result<Affine, SyntaxError> {
        let mut a = Affine { coeffs: Vec::new(), konst: 0 };
        let mut sign = 1i64;
        if self.eat_sym("-") {
            sign = -1;
        }
        loop {
            let pos = self.pos();
            let mut k: i64 = 1;
            let mut had_num = false;
            if let Some(Tok::Num(_)) = self.peek() {
                k = self.nat()?.try_into().map_err(|_| SyntaxError::Parse { pos, msg: "constant too large".into() })?;
                had_num = true;
                self.eat_sym("*");
            }
            if matches!(self.peek(), Some(Tok::Ident(n)) if !KEYWORDS.contains(&n.as_str())) {
                let v = self.var()?;
                if self.eat_sym("*") {
                    let m: i64 = self.nat()?.try_into().map_err(|_| SyntaxError::Parse { pos, msg: "constant too large".into() })?;
                    k *= m;
                }
                a.add_var(&v, sign * k);
            } else if had_num {
                a.konst += sign * k;
            } else {
                return Err(SyntaxError::Parse { pos, msg: "expected a variable or a natural number".into() });
            }
            if self.eat_sym("+") {
                sign = 1;
            } else if self.eat_sym("-") {
                sign = -1;
            } else {
                return Ok(a);
            }
        }
    }

    fn lower(&mut self, x: String, op: &str, rhs: Rhs, pos: Pos) -> Result<Stmt, SyntaxError> {
        match rhs {
            Rhs::Dist(d) => match op {
                ":=" => Ok(Stmt::AssignDist(x, d)),
                "+=" => Ok(Stmt::IncrDist(x, d)),
                _ => Err(SyntaxError::UnsupportedUpdate { pos, msg: "cannot subtract a random sample".into() }),
            },
            Rhs::Iid(d, k, y) => {
                if y == x {
                    return Err(SyntaxError::SameVariableIid { var: x, pos });
                }
                if d.count_var().is_some() {
                    return Err(SyntaxError::UnsupportedUpdate {
                        pos,
                        msg: "iid of a distribution with a variable count".into(),
                    });
                }
                let incr = (0..k).map(|_| Stmt::IidIncr { x: x.clone(), dist: d.clone(), y: y.clone() });
                match op {
                    ":=" => Ok(Stmt::seq(std::iter::once(Stmt::AssignConst(x.clone(), 0)).chain(incr).collect())),
                    "+=" => Ok(Stmt::seq(incr.collect())),
                    _ => Err(SyntaxError::UnsupportedUpdate { pos, msg: "cannot subtract an iid sum".into() }),
                }
            }
            Rhs::Affine(mut a) => {
                match op {
                    "+=" => a.add_var(&x, 1),
                    "-=" => {
                        a.coeffs.iter_mut().for_each(|(_, c)| *c = -*c);
                        a.konst = -a.konst;
                        a.add_var(&x, 1);
                    }
                    _ => {}
                }
                lower_affine(&x, a, pos)
            }
        }
    }

    fn prob_expr(&mut self) -> Result<ProbExpr, SyntaxError> {
        let mut acc = self.prob_term()?;
        loop {
            if self.eat_sym("+") {
                acc = fold(ProbExpr::Add(Box::new(acc), Box::new(self.prob_term()?)));
            } else if self.eat_sym("-") {
                acc = fold(ProbExpr::Sub(Box::new(acc), Box::new(self.prob_term()?)));
            } else {
                return Ok(acc);
            }
        }
    }

    fn prob_term(&mut self) -> Result<ProbExpr, SyntaxError> {
        let mut acc = self.prob_unary()?;
        loop {
            if self.eat_sym("*") {
                acc = fold(ProbExpr::Mul(Box::new(acc), Box::new(self.prob_unary()?)));
            } else if self.is_sym("/") {
                let pos = self.pos();
                self.i += 1;
                let rhs = self.prob_unary()?;
                if rhs.as_literal().is_some_and(|r| r.is_zero()) {
                    return Err(SyntaxError::Parse { pos, msg: "division by zero".into() });
                }
                acc = fold(ProbExpr::Div(Box::new(acc), Box::new(rhs)));
            } else if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Sym("("))) {
                acc = fold(ProbExpr::Mul(Box::new(acc), Box::new(self.prob_atom()?)));
            } else {
                return Ok(acc);
            }
        }
    }

    fn prob_unary(&mut self) -> Result<ProbExpr, SyntaxError> {
        if self.eat_sym("-") {
            return Ok(fold(ProbExpr::Neg(Box::new(self.prob_unary()?))));
        }
        self.prob_atom()
    }

    fn prob_atom(&mut self) -> Result<ProbExpr, SyntaxError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.i += 1;
                Ok(ProbExpr::Lit(r))
            }
            Some(Tok::Ident(n)) => {
                self.i += 1;
                if !self.params.contains(&n) {
                    return Err(SyntaxError::UndeclaredParameter { name: n, pos });
                }
                Ok(ProbExpr::Param(n))
            }
            Some(Tok::Sym("(")) => {
                self.i += 1;
                let e = self.prob_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.err("expected a probability"),
        }
    }

    fn guard(&mut self) -> Result<Guard, SyntaxError> {
        let mut acc = self.guard_and()?;
        while self.eat_sym("||") || self.eat_kw("or") {
            acc = Guard::or(acc, self.guard_and()?);
        }
        Ok(acc)
    }

    fn guard_and(&mut self) -> Result<Guard, SyntaxError> {
        let mut acc = self.guard_not()?;
        while self.eat_sym("&&") || self.eat_kw("and") {
            acc = Guard::and(acc, self.guard_not()?);
        }
        Ok(acc)
    }

    fn guard_not(&mut self) -> Result<Guard, SyntaxError> {
        if self.eat_sym("!") || self.eat_kw("not") {
            return Ok(Guard::not(self.guard_not()?));
        }
        if self.eat_sym("(") {
            let g = self.guard()?;
            self.expect_sym(")")?;
            return Ok(g);
        }
        if self.eat_kw("true") {
            return Ok(Guard::Const(true));
        }
        if self.eat_kw("false") {
            return Ok(Guard::Const(false));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Guard, SyntaxError> {
        let pos = self.pos();
        let lhs = self.operand()?;
        let rel = match self.peek() {
            Some(Tok::Sym("<")) => Rel::Lt,
            Some(Tok::Sym("<=")) => Rel::Le,
            Some(Tok::Sym("=")) => Rel::Eq,
            Some(Tok::Sym("!=")) => Rel::Ne,
            Some(Tok::Sym(">")) => Rel::Gt,
            Some(Tok::Sym(">=")) => Rel::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.i += 1;
        let rhs = self.operand()?;
        match (lhs, rhs) {
            (Operand::Var(a), Operand::Var(b)) => Err(SyntaxError::NonRectangularGuard {
                text: format!("{a} {} {b}", rel.symbol()),
                pos,
            }),
            (Operand::Var(v), Operand::Nat(n)) => Ok(Guard::Atom { var: v, rel, n }),
            (Operand::Nat(n), Operand::Var(v)) => Ok(Guard::Atom { var: v, rel: rel.flip(), n }),
            (Operand::Nat(a), Operand::Nat(b)) => Ok(Guard::Const(rel.holds(a, b))),
        }
    }

    fn operand(&mut self) -> Result<Operand, SyntaxError> {
        match self.peek() {
            Some(Tok::Num(_)) => Ok(Operand::Nat(self.nat()?)),
            Some(Tok::Ident(_)) => {
                let v = self.var()?;
                if matches!(self.peek(), Some(Tok::Sym("+" | "-" | "*"))) {
                    return self.err("guards compare a single variable with a constant");
                }
                Ok(Operand::Var(v))
            }
            _ => self.err("expected a variable or a natural number"),
        }
    }
}

enum Operand {
    Var(String),
    Nat(u64),
}

/// Folds operations whose operands are both literals.
fn fold(e: ProbExpr) -> ProbExpr {
    use ProbExpr::*;
    match e {
        Neg(a) => match *a {
            Lit(r) => Lit(-r),
            a => Neg(Box::new(a)),
        },
        Add(a, b) => match (*a, *b) {
            (Lit(x), Lit(y)) => Lit(x + y),
            (a, b) => Add(Box::new(a), Box::new(b)),
        },
        Sub(a, b) => match (*a, *b) {
            (Lit(x), Lit(y)) => Lit(x - y),
            (a, b) => Sub(Box::new(a), Box::new(b)),
        },
        Mul(a, b) => match (*a, *b) {
            (Lit(x), Lit(y)) => Lit(x * y),
            (a, b) => Mul(Box::new(a), Box::new(b)),
        },
        Div(a, b) => match (*a, *b) {
            (Lit(x), Lit(y)) if !y.is_zero() => Lit(x / y),
            (a, b) => Div(Box::new(a), Box::new(b)),
        },
        e => e,
    }
}

/// Turns `x := self*x + sum c_y*y + k` into core-near statements.
fn lower_affine(x: &str, mut a: Affine, pos: Pos) -> Result<Stmt, SyntaxError> {
    let own = a.take(x);
    if own != 0 && own != 1 {
        return Err(SyntaxError::UnsupportedUpdate {
            pos,
            msg: format!("{x} appears with coefficient {own} on its own right-hand side"),
        });
    }
    a.coeffs.retain(|(_, c)| *c != 0);
    if a.konst.abs() > MAX_UNROLLED_DECREMENTS || a.coeffs.iter().any(|(_, c)| c.abs() > MAX_UNROLLED_DECREMENTS) {
        return Err(SyntaxError::UnsupportedUpdate { pos, msg: "constant too large".into() });
    }
    let mut items = Vec::new();
    let mut konst = a.konst;
    if own == 0 {
        if let Some(i) = a.coeffs.iter().position(|(_, c)| *c == 1) {
            let y = a.coeffs[i].0.clone();
            a.coeffs[i].1 -= 1;
            items.push(Stmt::AssignVar(x.to_string(), y));
        } else {
            let k = konst.max(0);
            konst -= k;
            items.push(Stmt::AssignConst(x.to_string(), k as u64));
        }
    }
    for (y, c) in &a.coeffs {
        match *c {
            1 => items.push(Stmt::IncrVar(x.to_string(), y.clone())),
            c if c > 1 => items.push(Stmt::IidIncr { x: x.to_string(), dist: DistExpr::Dirac(c as u64), y: y.clone() }),
            _ => {}
        }
    }
    if konst > 0 {
        items.push(Stmt::IncrConst(x.to_string(), konst as u64));
    }
    for (y, c) in &a.coeffs {
        for _ in 0..(-c).max(0) {
            items.push(Stmt::SubVar(x.to_string(), y.clone()));
        }
    }
    for _ in 0..(-konst).max(0) {
        items.push(Stmt::Decr(x.to_string()));
    }
    Ok(Stmt::seq(items))
}

fn check_name(n: &str, pos: Pos) -> Result<(), SyntaxError> {
    let reserved = n == "T"
        || n.starts_with('_')
        || n.to_uppercase().starts_with("U_")
        || KEYWORDS.contains(&n)
        || DISTRIBUTIONS.contains(&n);
    if reserved {
        return Err(SyntaxError::ReservedName { name: n.to_string(), pos });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cas::rat;

    #[test]
    fn empty_program_is_an_error() {
        assert!(matches!(parse(""), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse("vars x;"), Err(SyntaxError::Parse { .. })));
    }

    #[test]
    fn mcpt_nests_loops_and_choices() {
        let p = parse(
            "vars n, c, running;
             while (n > 0) {
               running := 1;
               while (running = 1) { {running := 0} [1/2] {c := c + 1} };
               n := n - 1
             }",
        )
        .unwrap();
        let Stmt::While { body, .. } = &p.body else { panic!("outer loop") };
        let Stmt::Seq(items) = body.as_ref() else { panic!("sequence") };
        assert_eq!(items[0], Stmt::AssignConst("running".into(), 1));
        let Stmt::While { body: inner, .. } = &items[1] else { panic!("inner loop") };
        assert!(matches!(inner.as_ref(), Stmt::PChoice { .. }));
        assert_eq!(items[2], Stmt::Decr("n".into()));
        assert_eq!(p.vars, ["n", "c", "running"]);
    }

    #[test]
    fn variable_comparisons_are_rejected() {
        let e = parse("vars x, y; while (x < y) { x++ }").unwrap_err();
        assert!(matches!(e, SyntaxError::NonRectangularGuard { .. }));
        let e = parse("vars s, t; if (s != t) { s := 0 }").unwrap_err();
        assert!(matches!(e, SyntaxError::NonRectangularGuard { .. }));
    }

    #[test]
    fn catalan_is_rejected() {
        let e = parse("vars c, s; c += iid(catalan(1/2), s)").unwrap_err();
        assert!(matches!(e, SyntaxError::AlgebraicUnsupported { .. }));
        assert!(e.to_string().contains("algebraic PGF unsupported"));
        let e = parse("vars c, s; c += iid(2*catalan(1/2) + 1, s)").unwrap_err();
        assert!(matches!(e, SyntaxError::AlgebraicUnsupported { .. }));
    }

    #[test]
    fn same_variable_iid_is_rejected() {
        let e = parse("vars x; x += iid(geometric(1/2), x)").unwrap_err();
        assert!(matches!(e, SyntaxError::SameVariableIid { .. }));
    }

    #[test]
    fn undeclared_names() {
        assert!(matches!(parse("vars x; y := 1"), Err(SyntaxError::UndeclaredVariable { .. })));
        assert!(matches!(parse("vars x; {x := 1}[a]{skip}"), Err(SyntaxError::UndeclaredParameter { .. })));
        assert!(parse("params a; vars x; {x := 1}[a]{skip}").is_ok());
    }

    #[test]
    fn affine_updates() {
        let s = |src: &str| parse(&format!("vars x, y, z; {src}")).unwrap().body;
        assert_eq!(s("x := x"), Stmt::Skip);
        assert_eq!(s("x := x + 2"), Stmt::IncrConst("x".into(), 2));
        assert_eq!(s("x := x - 2"), Stmt::seq(vec![Stmt::Decr("x".into()), Stmt::Decr("x".into())]));
        assert_eq!(s("x := y"), Stmt::AssignVar("x".into(), "y".into()));
        assert_eq!(s("x += y"), Stmt::IncrVar("x".into(), "y".into()));
        assert_eq!(s("x -= y"), Stmt::SubVar("x".into(), "y".into()));
        assert_eq!(
            s("x := 2y + 3"),
            Stmt::seq(vec![
                Stmt::AssignConst("x".into(), 3),
                Stmt::IidIncr { x: "x".into(), dist: DistExpr::Dirac(2), y: "y".into() },
            ])
        );
        assert_eq!(
            s("x += z - y"),
            Stmt::seq(vec![Stmt::IncrVar("x".into(), "z".into()), Stmt::SubVar("x".into(), "y".into())])
        );
        assert!(matches!(parse("vars x; x := 2x"), Err(SyntaxError::UnsupportedUpdate { .. })));
    }

    #[test]
    fn flipped_comparisons_and_sugar() {
        let p = parse("vars n, m; while (0 < n) { m += unif(1,6); n-- }").unwrap();
        let Stmt::While { guard, .. } = &p.body else { panic!() };
        assert_eq!(guard, &Guard::atom("n", Rel::Gt, 0));
    }

    #[test]
    fn probability_expressions_fold_literals() {
        let p = parse("params a, b; vars t; t := bernoulli((1-a)*b/(a+b-a*b)); {t := 0}[0.25]{skip}").unwrap();
        let Stmt::Seq(items) = &p.body else { panic!() };
        let Stmt::PChoice { prob, .. } = &items[1] else { panic!() };
        assert_eq!(prob, &ProbExpr::Lit(rat(1, 4)));
    }

    #[test]
    fn invariant_sections_and_annotations() {
        let p = parse("vars x, c;\nwhile (x = 1) { {x := 0}[1/2]{c++} }\n#invariant\nif (x = 1) { c += geometric(1/2); x := 0 }\n")
            .unwrap();
        assert!(p.spec.as_ref().unwrap().loop_free());
        let q = parse("vars x, c; @invariant { if (x = 1) { c += geometric(1/2); x := 0 } } while (x = 1) { {x := 0}[1/2]{c++} }").unwrap();
        assert!(matches!(&q.body, Stmt::While { invariant: Some(_), .. }));
    }

    #[test]
    fn switch_and_repeat() {
        let p = parse("vars s, d; switch (s) { case 0: d := 1; break; case 1: d := 2; break; default: skip }; repeat 2 times { d++ }").unwrap();
        let Stmt::Seq(items) = &p.body else { panic!() };
        let Stmt::Switch { cases, default, .. } = &items[0] else { panic!() };
        assert_eq!(cases.len(), 2);
        assert_eq!(default.as_deref(), Some(&Stmt::Skip));
        assert!(matches!(items[1], Stmt::Repeat { n: 2, .. }));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("vars x;\nx := ;") {
            Err(SyntaxError::Parse { pos, .. }) => assert_eq!((pos.line, pos.col), (2, 6)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reserved_names() {
        assert!(matches!(parse("vars T; T := 1"), Err(SyntaxError::ReservedName { .. })));
        assert!(matches!(parse("vars _t; skip"), Err(SyntaxError::ReservedName { .. })));
        assert!(matches!(parse("vars x, X; skip"), Err(SyntaxError::NameClash { .. })));
    }
}
