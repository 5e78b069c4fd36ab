use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::expr::ExprError;

/// Exit status of the command line, one per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    /// A well-formed input failed its check (signalling channel, failed
    /// verification).
    Verdict,
    /// Unreadable, malformed or ill-typed input.
    Input,
    /// The computation itself failed.
    Computation,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Verdict => 1,
            ErrorClass::Input => 2,
            ErrorClass::Computation => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
    /// Byte offset, line and column for expression errors.
    pub position: Option<(usize, usize, usize)>,
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError { class: ErrorClass::Input, message: msg.to_string(), position: None }
    }

    pub fn verdict(msg: impl fmt::Display) -> Self {
        CliError { class: ErrorClass::Verdict, message: msg.to_string(), position: None }
    }

    pub fn json(e: serde_json::Error) -> Self {
        Self::input(format!("json: {e}"))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }

    /// `{"error": {...}}` as printed on stderr under `--json`.
    pub fn to_json(&self) -> String {
        let mut inner = serde_json::json!({
            "class": self.class,
            "code": self.exit_code(),
            "message": self.message,
        });
        if let Some((offset, line, column)) = self.position {
            inner["position"] = serde_json::json!({ "offset": offset, "line": line, "column": column });
        }
        serde_json::json!({ "error": inner }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<procgpt_core::Error> for CliError {
    fn from(e: procgpt_core::Error) -> Self {
        use procgpt_core::Error as E;
        let class = match e {
            E::NotNonSignalling { .. } => ErrorClass::Verdict,
            E::TypeMismatch { .. }
            | E::SignatureMismatch(_)
            | E::InvalidAssemblage(_)
            | E::InvalidChannel(_)
            | E::InvalidProbability(_)
            | E::UnboundGenerator(_) => ErrorClass::Input,
            _ => ErrorClass::Computation,
        };
        CliError { class, message: e.to_string(), position: None }
    }
}

impl From<ExprError> for CliError {
    fn from(e: ExprError) -> Self {
        let p = e.position();
        CliError { class: ErrorClass::Input, message: e.to_string(), position: Some((p.offset, p.line, p.column)) }
    }
}
