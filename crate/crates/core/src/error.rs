use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("undeclared atom `{0}`")]
    UndeclaredAtom(String),
    #[error("invalid atom name `{0}`")]
    InvalidAtom(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("at least one concept is required")]
    EmptyConcepts,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("state budget of {limit} exceeded")]
    StateBudget { limit: usize },
    #[error("formula atom `{0}` is not a declared concept")]
    UnknownAtom(String),
    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),
    #[error("concept `{0}` has no cost or a zero cost")]
    MissingCost(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed automaton: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConceptError {
    #[error("concept `{0}` has an empty output sequence")]
    EmptySequence(String),
    #[error("concepts `{0}` and `{1}` share the output sequence")]
    Collision(String, String),
    #[error("output id {output} is outside the vocabulary of size {vocab}")]
    UnknownOutput { output: u32, vocab: usize },
    #[error("concept `{0}` is not part of the automaton alphabet")]
    NotInAlphabet(String),
    #[error("unsupported noMatch policy `{0}`")]
    Policy(String),
    #[error("malformed concept table: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("output id {output} is outside the vocabulary of size {vocab}")]
    OutOfRange { output: u32, vocab: usize },
    #[error("prefix length {step} exceeds the {available} stored steps")]
    StepOverflow { step: usize, available: usize },
    #[error("unknown sequence `{0}`")]
    MissingSequence(String),
    #[error("row {row} is not a log-distribution (logsumexp = {logsumexp})")]
    Normalization { row: usize, logsumexp: f64 },
    #[error("scorer request timed out")]
    Timeout,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("invalid scorer data: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid decode configuration: {0}")]
    Config(String),
    #[error("no accepting sequence of {horizon} outputs exists from the start state (distance {distance})")]
    Infeasible { horizon: usize, distance: String },
    #[error("no accepting sequence of exactly {horizon} outputs exists, although the start distance {distance} is within the horizon")]
    NoExactLength { horizon: usize, distance: String },
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration of {count} sequences exceeds the cap of {cap}")]
    Cap { count: u128, cap: u128 },
    #[error("automaton and formula disagree on outputs {0:?}")]
    Mismatch(Vec<u32>),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}
