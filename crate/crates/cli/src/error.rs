use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric invariant violated: {0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<qdarwin::Error> for CliError {
    fn from(e: qdarwin::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let numeric: CliError = qdarwin::Error::NegativeEigenvalue { value: -1e-6 }.into();
        assert_eq!(numeric.exit_code(), 3);
        let input: CliError = qdarwin::Error::FragmentSize { k: 5, n: 4 }.into();
        assert_eq!(input.exit_code(), 2);
        assert_eq!(CliError::io("x", std::io::Error::other("y")).exit_code(), 4);
    }
}
