//! Error type shared by all core modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A loss or gradient stopped being finite during training.
    #[error("training diverged at optimizer step {step}: {reason}")]
    Diverged { step: u64, reason: String },

    /// CSV row with the wrong number of columns. Line numbers are 1-based
    /// and include the header line.
    #[error("line {line}: expected {expected} columns, found {found}")]
    CsvColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// CSV feature cell that does not parse as a finite number.
    #[error("line {line}: non-numeric feature value {value:?}")]
    CsvBadFeature { line: usize, value: String },

    /// CSV label cell that is not a valid class index.
    #[error("line {line}: label {value:?} is not a valid class index")]
    CsvBadLabel { line: usize, value: String },

    /// Malformed or incompatible checkpoint file.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    /// A failure inside a specific training cycle.
    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps the error with the training cycle it occurred in.
    pub fn in_cycle(self, cycle: usize) -> Self {
        Error::Cycle {
            cycle,
            source: Box::new(self),
        }
    }
}
