use thiserror::Error;

/// Errors shared across the crate.
///
/// Infeasibility of a decision problem is *not* an error; operations that
/// decide feasibility return `Option`/`None` instead. Errors signal bad
/// input, violated preconditions, or exhausted desk-scale budgets.
#[derive(Debug, Error)]
pub enum Error {
    /// Text input that does not match the documented grammar.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A precondition or structural invariant was violated by the caller.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A configurable enumeration / state / node cap was exceeded.
    /// Distinct from infeasibility: the search was cut short, not resolved.
    #[error("{what} cap exceeded (limit {limit})")]
    CapExceeded { what: &'static str, limit: u64 },

    /// An operation that requires a feasible input was handed an infeasible one.
    #[error("infeasible input: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    /// True when the error is a budget/cap exhaustion, which maps to a
    /// dedicated exit code in the CLI.
    pub fn is_cap_exceeded(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}
