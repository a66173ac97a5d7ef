//! Merit functions, damped least squares and glass substitution.

use thiserror::Error;

use crate::glass::GlassError;

pub mod hammer;
pub mod local;
pub mod merit;
pub mod variables;

pub use hammer::{hammer_optimize, HammerOutcome, HammerRecord, HammerSettings};
pub use local::{local_optimize, LocalOutcome, LocalSettings, StopReason};
pub use merit::{
    merit_value, merit_value_with, MeritReport, MeritSettings, Mode, Operand, OperandKind,
    OperandResult, PENALTY,
};
pub use variables::{Variable, VariableSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("merit function has no operand with positive weight")]
    EmptyMeritFunction,
    #[error("invalid operand: {0}")]
    BadOperand(String),
    #[error("no continuous variables to optimize")]
    NoVariables,
    #[error("invalid variable: {0}")]
    BadVariable(String),
    #[error(transparent)]
    Glass(#[from] GlassError),
}
