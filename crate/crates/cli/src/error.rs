use std::fmt;
use std::path::Path;

/// Process exit codes. Stable contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const VERIFY_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const DATA: u8 = 3;
}

#[derive(Debug)]
pub enum CliError {
    /// Bad command line, configuration or input file syntax.
    Config(String),
    /// Well-formed input that the computation cannot use.
    Data(String),
    /// `verify` found a failing check.
    Verify(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn at_line(path: &Path, line: usize, msg: impl fmt::Display) -> Self {
        CliError::Config(format!("{}:{line}: {msg}", path.display()))
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) | CliError::Io(_) => exit::DATA,
            CliError::Verify(_) => exit::VERIFY_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<autohsic::Error> for CliError {
    fn from(e: autohsic::Error) -> Self {
        match e {
            autohsic::Error::InvalidParameter(_)
            | autohsic::Error::InvalidBandwidth(_)
            | autohsic::Error::InvalidSpace(_)
            | autohsic::Error::MissingBandwidth => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
