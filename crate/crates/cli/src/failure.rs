//! Exit-code mapping: 0 success, 1 input error, 2 numerical failure,
//! 3 property violation.

use weaksync::Error;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
    Violation(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Violation(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) | Failure::Violation(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse { .. }
            | Error::SelfLoop { .. }
            | Error::NonPositiveWeight { .. }
            | Error::DuplicateEdge { .. }
            | Error::NodeOutOfRange { .. }
            | Error::Dimension(_)
            | Error::InvalidConfig(_)
            | Error::NonPositiveInput { .. }
            | Error::NotStronglyConnected
            | Error::Io { .. } => Failure::Input(msg),
            Error::NotStabilizable { .. }
            | Error::NotHurwitz { .. }
            | Error::Convergence { .. }
            | Error::Singular(_)
            | Error::StepSizeUnderflow { .. }
            | Error::NonFiniteState { .. }
            | Error::MaxStepsExceeded { .. }
            | Error::PrerequisiteFailed(_) => Failure::Numerical(msg),
            Error::KernelViolation { .. } => Failure::Violation(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Attaches the offending file path to an error (parse errors carry only
/// a line number on their own).
pub fn with_path(path: &std::path::Path, e: Error) -> Failure {
    let f = Failure::from(e);
    let msg = format!("{}: {}", path.display(), f.message());
    match f {
        Failure::Input(_) => Failure::Input(msg),
        Failure::Numerical(_) => Failure::Numerical(msg),
        Failure::Violation(_) => Failure::Violation(msg),
    }
}
