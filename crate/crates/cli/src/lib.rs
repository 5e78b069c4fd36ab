//! File formats, realization certificates and their independent checker,
//! the process-expression parser, and the commands behind `procgpt`.

pub mod certificate;
pub mod commands;
pub mod error;
pub mod expr;
pub mod format;
pub mod verify;

pub use certificate::CertificateFile;
pub use error::{CliError, ErrorClass};
pub use expr::{parse_process_expr, print_process_expr, ExprError};
pub use format::{AssemblageFile, ChannelFile, ProcessFile};
pub use verify::{verify_certificate, VerifyReport};
