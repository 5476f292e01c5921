//! Indeterminates and exponent vectors.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

/// What an indeterminate stands for. The derived order is the global
/// indeterminate order used for canonical term ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndetKind {
    /// `X` for program variable `x`.
    Program,
    /// `U_X`, the meta indeterminate paired with program variable `x`.
    Meta,
    /// A symbolic parameter such as a hit probability.
    Param,
    /// The reserved placeholder `T` of distribution PGFs.
    Placeholder,
}

/// A formal indeterminate.
///
/// Program and meta indeterminates are keyed by the *variable* name; their
/// rendered names are derived (`x` renders as `X`, its meta partner as `U_X`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndetId {
    kind: IndetKind,
    name: Arc<str>,
}

impl IndetId {
    pub fn program(var: &str) -> Self {
        Self { kind: IndetKind::Program, name: Arc::from(var) }
    }

    pub fn meta(var: &str) -> Self {
        Self { kind: IndetKind::Meta, name: Arc::from(var) }
    }

    pub fn param(name: &str) -> Self {
        Self { kind: IndetKind::Param, name: Arc::from(name) }
    }

    pub fn placeholder() -> Self {
        Self { kind: IndetKind::Placeholder, name: Arc::from("T") }
    }

    /// An auxiliary series variable of placeholder kind (never a program
    /// variable, never filtered by the semantics).
    pub fn aux(name: &str) -> Self {
        Self { kind: IndetKind::Placeholder, name: Arc::from(name) }
    }

    pub fn kind(&self) -> IndetKind {
        self.kind
    }

    /// The variable or parameter name this indeterminate was built from.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The meta indeterminate paired with a program indeterminate.
    pub fn meta_partner(&self) -> Option<IndetId> {
        match self.kind {
            IndetKind::Program => Some(IndetId::meta(&self.name)),
            _ => None,
        }
    }

    /// The program indeterminate a meta indeterminate belongs to.
    pub fn program_partner(&self) -> Option<IndetId> {
        match self.kind {
            IndetKind::Meta => Some(IndetId::program(&self.name)),
            _ => None,
        }
    }

    pub fn is_program(&self) -> bool {
        self.kind == IndetKind::Program
    }

    pub fn is_meta(&self) -> bool {
        self.kind == IndetKind::Meta
    }

    pub fn is_param(&self) -> bool {
        self.kind == IndetKind::Param
    }
}

impl fmt::Display for IndetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            IndetKind::Program => write!(f, "{}", self.name.to_uppercase()),
            IndetKind::Meta => write!(f, "U_{}", self.name.to_uppercase()),
            IndetKind::Param => write!(f, "{}", self.name),
            IndetKind::Placeholder => write!(f, "{}", self.name),
        }
    }
}

impl fmt::Debug for IndetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sparse exponent vector: `(indeterminate, exponent)` pairs sorted by
/// indeterminate, every stored exponent at least 1.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ExpVec(SmallVec<[(IndetId, u32); 4]>);

impl ExpVec {
    pub fn one() -> Self {
        Self(SmallVec::new())
    }

    pub fn var(x: &IndetId, exp: u32) -> Self {
        let mut v = SmallVec::new();
        if exp > 0 {
            v.push((x.clone(), exp));
        }
        Self(v)
    }

    /// Builds from arbitrary pairs; zero exponents are dropped and repeated
    /// indeterminates are merged.
    pub fn from_pairs<I: IntoIterator<Item = (IndetId, u32)>>(pairs: I) -> Self {
        let mut v: SmallVec<[(IndetId, u32); 4]> = pairs.into_iter().filter(|(_, e)| *e > 0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: SmallVec<[(IndetId, u32); 4]> = SmallVec::new();
        for (x, e) in v {
            match out.last_mut() {
                Some((y, f)) if *y == x => *f += e,
                _ => out.push((x, e)),
            }
        }
        Self(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn exp(&self, x: &IndetId) -> u32 {
        self.0
            .binary_search_by(|(y, _)| y.cmp(x))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndetId, u32)> {
        self.0.iter().map(|(x, e)| (x, *e))
    }

    pub fn mul(&self, other: &ExpVec) -> ExpVec {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        ExpVec(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &ExpVec) -> Option<ExpVec> {
        let mut out = SmallVec::new();
        let mut j = 0;
        for (x, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *x {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *x {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((x.clone(), e - f)),
                }
            } else {
                out.push((x.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(ExpVec(out))
    }

    /// Replaces the exponent of `x`.
    pub fn with_exp(&self, x: &IndetId, exp: u32) -> ExpVec {
        let mut out: SmallVec<[(IndetId, u32); 4]> =
            self.0.iter().filter(|(y, _)| y != x).cloned().collect();
        if exp > 0 {
            let pos = out.partition_point(|(y, _)| y < x);
            out.insert(pos, (x.clone(), exp));
        }
        ExpVec(out)
    }

    pub fn without(&self, x: &IndetId) -> ExpVec {
        self.with_exp(x, 0)
    }

    /// Lexicographic comparison of exponents along the global indeterminate
    /// order: the vector with the larger exponent on the first differing
    /// indeterminate is greater.
    fn lex_cmp(&self, other: &ExpVec) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let n = a.len().min(b.len());
        for k in 0..n {
            if a[k].0 != b[k].0 {
                // the side holding the earlier indeterminate has a positive
                // exponent where the other has zero
                return if a[k].0 < b[k].0 { Ordering::Greater } else { Ordering::Less };
            }
            if a[k].1 != b[k].1 {
                return a[k].1.cmp(&b[k].1);
            }
        }
        a.len().cmp(&b.len())
    }
}

/// Graded order used for canonical iteration: lower total degree first, and
/// within one degree the lexicographically larger monomial first
/// (`M^2 < M*N < N^2` in iteration order). It is a monomial order.
impl Ord for ExpVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.lex_cmp(self))
    }
}

impl PartialOrd for ExpVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (x, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{x}")?;
            } else {
                write!(f, "{x}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
