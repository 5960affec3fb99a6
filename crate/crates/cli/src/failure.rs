use std::fmt::Display;

use fkqc::FkError;

pub const VALIDATION: u8 = 1;
pub const NUMERICAL: u8 = 2;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    /// Already printed; carries only the exit code.
    Reported(u8),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => VALIDATION,
            Failure::Numerical(_) => NUMERICAL,
            Failure::Reported(c) => *c,
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => Some(m),
            Failure::Reported(_) => None,
        }
    }

    pub fn io(context: impl Display, e: impl Display) -> Self {
        Failure::Validation(format!("{context}: {e}"))
    }
}

impl From<FkError> for Failure {
    fn from(e: FkError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}
