use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A formula was evaluated outside the detuning range where it holds.
    #[error("outside validity range: {0}")]
    OutOfValidity(String),

    /// An energy denominator vanished (or fell under the pole guard).
    #[error("resonant denominator in {state} (|{denominator:.3e}| < guard {guard:.3e} rad/s)")]
    Pole {
        state: String,
        denominator: f64,
        guard: f64,
    },

    #[error("basis dimension {dimension} exceeds the configured limit {limit}")]
    Capacity { dimension: usize, limit: usize },

    #[error("step control failed: relative change {achieved:.3e} after {halvings} halvings (tolerance {tolerance:.1e})")]
    StepControl {
        achieved: f64,
        tolerance: f64,
        halvings: u32,
    },

    #[error("rate extraction failed: {0}")]
    Extraction(String),

    #[error("scenario file line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that come from the physics domain (poles, validity
    /// limits, oracle failures) rather than from malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::OutOfValidity(_)
                | Error::Pole { .. }
                | Error::Capacity { .. }
                | Error::StepControl { .. }
                | Error::Extraction(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
