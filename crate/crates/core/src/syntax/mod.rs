//! Concrete syntax, validation and desugaring of rectangular probabilistic
//! programs.
//!
//! ```text
//! params a;                    // optional
//! vars n, c;                   // optional; inferred from use when absent
//! while (n > 0) {
//!   {n := n - 1} [1/2] {c := c + 1}
//! }
//! #invariant
//! c += iid(geometric(1/2), n); n := 0
//! ```

mod ast;
mod desugar;
mod guard;
mod lexer;
mod parser;
mod pretty;

pub use ast::{Count, DistExpr, Guard, Pos, ProbExpr, Program, Rel, Stmt};
pub use desugar::{desugar, desugar_stmt, CoreStmt, DesugarOptions, TEMP_PREFIX};
pub use guard::CoreGuard;
pub use parser::{parse, parse_dist, parse_guard, parse_spec};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{pos}: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("{pos}: undeclared variable {name}")]
    UndeclaredVariable { name: String, pos: Pos },
    #[error("{pos}: undeclared parameter {name}")]
    UndeclaredParameter { name: String, pos: Pos },
    #[error("{pos}: non-rectangular guard `{text}`: guards must compare a variable with a constant")]
    NonRectangularGuard { text: String, pos: Pos },
    #[error("{pos}: algebraic PGF unsupported: {name} has no rational generating function")]
    AlgebraicUnsupported { name: String, pos: Pos },
    #[error("{pos}: iid source and target are the same variable {var}")]
    SameVariableIid { var: String, pos: Pos },
    #[error("{pos}: unsupported update: {msg}")]
    UnsupportedUpdate { pos: Pos, msg: String },
    #[error("{pos}: name {name} is reserved")]
    ReservedName { name: String, pos: Pos },
    #[error("{pos}: name {name} clashes with an earlier declaration")]
    NameClash { name: String, pos: Pos },
    #[error("generated temporary {0} collides with a program variable")]
    FreshVariableClash(String),
}
