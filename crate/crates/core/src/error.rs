use thiserror::Error;

/// Errors raised by the algebra routines.
///
/// Variants fall into three families, which the CLI maps to distinct exit
/// codes: malformed input ([`Error::Parse`], [`Error::Index`]), violated
/// mathematical preconditions, and internal invariant failures
/// ([`Error::Internal`]) that indicate a bug rather than bad input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("index {index} out of range 1..={n}")]
    Index { index: usize, n: usize },

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series is not primitive (first failing degree {degree})")]
    NotPrimitive { degree: usize },

    #[error("series is not group-like")]
    NotGroupLike,

    #[error("not conjugate to exp(X{generator}) (inconsistent at degree {degree})")]
    NotConjugate { generator: usize, degree: usize },

    #[error("not in filtration level {level}: nonzero part in degree {degree}")]
    NotInFiltration { level: usize, degree: usize },

    #[error("element is not in D_{degree}(H)")]
    NotInD { degree: usize },

    #[error("chain is not a cycle")]
    NotACycle,

    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),

    #[error("internal invariant failure: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures that signal a defect in this library rather than
    /// in the caller's input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Index { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
