use std::fmt;

use tempo_core::error::{CompileError, ConceptError, DecodeError, DfaError, FormulaError, ScorerError};

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input.
    Input(String),
    /// No accepting sequence fits the horizon.
    Infeasible(String),
    /// A size budget was exceeded.
    Budget(String),
    /// Scorer failures and other runtime errors.
    Runtime(String),
    /// A replayed run produced different outputs.
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Runtime(_) | CliError::Mismatch(_) => 1,
        }
    }

    pub fn input(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Input(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

impl From<FormulaError> for CliError {
    fn from(e: FormulaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::StateBudget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ConceptError> for CliError {
    fn from(e: ConceptError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DfaError> for CliError {
    fn from(e: DfaError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ScorerError> for CliError {
    fn from(e: ScorerError) -> Self {
        match e {
            ScorerError::Invalid(_) | ScorerError::MissingSequence(_) => CliError::Input(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Infeasible { .. } | DecodeError::NoExactLength { .. } => {
                CliError::Infeasible(e.to_string())
            }
            DecodeError::Config(_) | DecodeError::Concept(_) => CliError::Input(e.to_string()),
            DecodeError::Scorer(s) => s.into(),
            DecodeError::Internal(_) => CliError::Runtime(e.to_string()),
        }
    }
}
