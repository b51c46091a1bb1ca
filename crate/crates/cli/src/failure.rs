use genent_core::Error;

pub const INVALID_INPUT: u8 = 2;
pub const DIMENSION_CAP: u8 = 3;
pub const STRUCTURE_MISMATCH: u8 = 4;
pub const VERIFICATION_FAILED: u8 = 5;
pub const OPERATIONAL: u8 = 1;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }

    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self::new(INVALID_INPUT, error)
    }

    pub fn operational(error: impl Into<anyhow::Error>) -> Self {
        Self::new(OPERATIONAL, error)
    }

    /// Errors raised while loading or validating user-supplied files.
    pub fn loading(error: Error) -> Self {
        match error {
            Error::DimensionCap { .. } => Self::new(DIMENSION_CAP, error),
            other => Self::input(other),
        }
    }

    /// Errors raised by an analysis pipeline on an already loaded state.
    pub fn pipeline(error: Error) -> Self {
        let code = match &error {
            Error::DimensionCap { .. } => DIMENSION_CAP,
            Error::UnknownLabel(_) | Error::Arity(_) | Error::Shape(_) | Error::Structure(_) => STRUCTURE_MISMATCH,
            Error::Parameter(_)
            | Error::Serde(_)
            | Error::Integrity(_)
            | Error::NotInEbSpan { .. }
            | Error::LabelCollision(_) => INVALID_INPUT,
            _ => OPERATIONAL,
        };
        Self::new(code, error)
    }

    pub fn with_context(mut self, context: impl std::fmt::Display) -> Self {
        self.error = self.error.context(context.to_string());
        self
    }
}
