use std::path::Path;

use serde::Serialize;

/// Failure classes, each with its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Failure,
    Usage,
    MissingFile,
    SchemaMismatch,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Failure => 1,
            Kind::Usage => 2,
            Kind::MissingFile => 3,
            Kind::SchemaMismatch => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Kind::Usage, message)
    }

    pub fn missing(path: &Path) -> Self {
        Self::new(Kind::MissingFile, format!("file not found: {}", path.display()))
    }

    pub fn schema(path: &Path, detail: impl std::fmt::Display) -> Self {
        Self::new(Kind::SchemaMismatch, format!("{}: {detail}", path.display()))
    }

    /// One JSON object on one line, for scripts.
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: Kind,
            code: i32,
            message: &'a str,
        }
        let message = self.message.replace('\n', " ");
        serde_json::to_string(&Line {
            error: self.kind,
            code: self.kind.exit_code(),
            message: &message,
        })
        .unwrap_or_else(|_| r#"{"error":"failure","code":1}"#.to_string())
    }
}

impl From<riskroute::Error> for CliError {
    fn from(e: riskroute::Error) -> Self {
        let kind = match e.root() {
            riskroute::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Kind::MissingFile,
            riskroute::Error::InvalidConfig(_) => Kind::Usage,
            _ => Kind::Failure,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Failure, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Kind::Failure, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
