//! Meadow rationals, unit dimensions and money-of-account expressions.

mod dimension;
mod expr;
mod quantity;
mod rat;

pub use dimension::Dimension;
pub use expr::{eval_expr, parse_expr, Env, Expr};
pub use quantity::Quantity;
pub use rat::{meadow_div, Rat};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("syntax error at byte {offset}: expected one of {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("dimension mismatch: expected `{expected}`, got `{got}`")]
    DimensionMismatch { expected: Dimension, got: Dimension },
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("malformed unit `{0}`")]
    BadUnit(String),
}
