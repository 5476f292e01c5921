//! Exact polynomial and rational-function arithmetic over formal power
//! series in program, meta, parameter and placeholder indeterminates.

mod closed_form;
mod indet;
mod poly;
mod text;

pub use closed_form::{ClosedForm, Projection};
pub use indet::{ExpVec, IndetId, IndetKind};
pub use poly::{int, rat, Poly, Rational};
pub use text::{parse_closed_form, parse_rational, render_rational, Resolver};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CasError {
    #[error("division by the zero series")]
    DivisionByZeroFps,
    #[error("denominator {0} has zero constant term and is not invertible")]
    NonInvertibleDenominator(String),
    #[error("projection {indet} := {value} is ill-defined: the series diverges there")]
    IllDefinedProjection { indet: String, value: String },
    #[error("cannot shift down in {0}: the series has a {0}-free part")]
    ShiftPrecondition(String),
    #[error("truncated coefficient {0} is not a polynomial")]
    NonPolynomialCoefficient(String),
    #[error("cannot read closed form at column {col}: {msg}")]
    Parse { col: usize, msg: String },
}
