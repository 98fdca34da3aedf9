//! Failure classes shared by the command line (as exit codes) and the HTTP
//! service (as the `code` field of error bodies).

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogError;
use crate::evaluation::EvaluationError;
use crate::session::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// A catalog, session or request document is malformed or violates an invariant.
    Validation,
    /// Bad command-line arguments or an unsupported request.
    Usage,
    /// Evaluation succeeded but no image/service pair is feasible.
    NoFeasibleCombination,
    /// A file or resource could not be read, written or found.
    Input,
    /// The engine failed on an input that passed validation.
    Evaluation,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 5] = [
        ErrorCode::Validation,
        ErrorCode::Usage,
        ErrorCode::NoFeasibleCombination,
        ErrorCode::Input,
        ErrorCode::Evaluation,
    ];

    /// Process exit status. Success is 0.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorCode::Validation => 1,
            ErrorCode::Usage => 2,
            ErrorCode::NoFeasibleCombination => 3,
            ErrorCode::Input => 4,
            ErrorCode::Evaluation => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Validation => "validation",
            ErrorCode::Usage => "usage",
            ErrorCode::NoFeasibleCombination => "no_feasible_combination",
            ErrorCode::Input => "input",
            ErrorCode::Evaluation => "evaluation",
        }
    }
}

impl From<&CatalogError> for ErrorCode {
    fn from(e: &CatalogError) -> Self {
        match e {
            CatalogError::Io(_) => ErrorCode::Input,
            _ => ErrorCode::Validation,
        }
    }
}

impl From<&EvaluationError> for ErrorCode {
    fn from(e: &EvaluationError) -> Self {
        match e {
            EvaluationError::NoFeasibleCombination => ErrorCode::NoFeasibleCombination,
            EvaluationError::InvalidWeights { .. } => ErrorCode::Validation,
            _ => ErrorCode::Evaluation,
        }
    }
}

impl From<&SessionError> for ErrorCode {
    fn from(e: &SessionError) -> Self {
        match e {
            SessionError::Parse(_) | SessionError::Invalid { .. } => ErrorCode::Validation,
            SessionError::Evaluation(e) => e.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn exit_codes_are_distinct_and_nonzero() {
        let codes: HashSet<u8> = ErrorCode::ALL.iter().map(|c| c.exit_code()).collect();
        assert_eq!(codes.len(), ErrorCode::ALL.len());
        assert!(!codes.contains(&0));
    }
}
