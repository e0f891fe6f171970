use thiserror::Error;

use crate::expr::{EvalError, ExprError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("integration path crosses the singular line u = v + {offset}")]
    SingularPath { offset: f64 },
    #[error("zero test could not decide: {0}")]
    IndeterminateTermination(String),
    #[error("cell pivot {pivot:e} vanishes near (u={u}, v={v})")]
    UnstableCell { u: f64, v: f64, pivot: f64 },
    #[error("equation does not have the characteristic propagation property")]
    NotCpp,
    #[error("CFL ratio dt/dx = {ratio} exceeds 1")]
    CflViolation { ratio: f64 },
    #[error("data support edge {edge} is not a grid node")]
    SupportNotAligned { edge: f64 },
    #[error("substitution sequence does not double-terminate")]
    NotTerminating,
    #[error("tail region is empty on this grid")]
    RegionEmpty,
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Route an undecidable zero test to `IndeterminateTermination`.
    pub(crate) fn from_zero_test(e: ExprError, what: &str) -> Error {
        match e {
            ExprError::AllPointsSingular => {
                Error::IndeterminateTermination(format!("{what}: every sample point is singular"))
            }
            other => Error::Expr(other),
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnstableCell { .. }
                | Error::CflViolation { .. }
                | Error::SingularPath { .. }
                | Error::Eval(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
