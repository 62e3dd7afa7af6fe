use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Invalid configuration or model.
    Validation(String),
    /// Two independent computations of the same quantity disagree.
    Agreement(String),
    /// An estimator warning escalated by `--strict`.
    StrictWarning(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Agreement(_) => 2,
            CliError::StrictWarning(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Agreement(m) | CliError::StrictWarning(m) => {
                f.write_str(m)
            }
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hyheat::Error> for CliError {
    fn from(e: hyheat::Error) -> Self {
        match e {
            hyheat::Error::AgreementFailure { .. } => CliError::Agreement(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let agree: CliError = hyheat::Error::AgreementFailure { direct: 1.0, eigen: 2.0, gap: 1.0 }.into();
        assert_eq!(agree.exit_code(), 2);
        let invalid: CliError = hyheat::Error::NonpositiveP(0.0).into();
        assert_eq!(invalid.exit_code(), 1);
        assert_eq!(CliError::StrictWarning(String::new()).exit_code(), 3);
    }
}
