//! Generalized probabilistic theories of processes: exact and floating
//! linear processes, diagram terms, classical and quantum theories, the
//! non-signalling test, quasi-mixture decomposition of non-signalling
//! channels and common-cause realizations over extension systems.

pub mod decompose;
pub mod completion;
pub mod diagram;
pub mod epr;
pub mod error;
pub mod exec;
pub mod hermitian;
pub mod lp;
pub mod matrix;
pub mod ns;
pub mod process;
pub mod samples;
pub mod scalar;
pub mod system;
pub mod theory;

pub use diagram::{eval_diagram, Bindings, DiagramTerm, Node, Weight};
pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::Matrix;
pub use ns::{check_nonsignalling, check_nonsignalling_with, MultipartiteChannel, NsReport, Wing};
pub use process::{compose_par, compose_seq, convex_mix, LinearProcess};
pub use scalar::{Arithmetic, Rational, Scalar};
pub use system::{Brand, Kind, Signature, SystemType};
pub use theory::Theory;
