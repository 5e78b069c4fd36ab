use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch { context: String, expected: String, found: String },

    #[error("invalid probability {0}")]
    InvalidProbability(String),

    #[error("invalid permutation {0:?} for {1} wires")]
    InvalidPermutation(Vec<usize>, usize),

    #[error("unbound generator `{0}`")]
    UnboundGenerator(String),

    #[error("wrong system kind: {0}")]
    WrongKind(String),

    #[error("unknown system type {0}")]
    UnknownType(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("channel is signalling (max residual {residual})")]
    NotNonSignalling { residual: String },

    #[error("reconstruction residual {residual} exceeds tolerance {tol}")]
    ResidualTooLarge { residual: String, tol: f64 },

    #[error("local channel frame for {input} -> {output} has affine rank {rank}, expected {expected}")]
    FrameDeficient { input: String, output: String, rank: usize, expected: usize },

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("invalid assemblage: {0}")]
    InvalidAssemblage(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("value not representable in {0} arithmetic: {1}")]
    InexactArithmetic(&'static str, String),

    #[error("linear program too large ({0} variables)")]
    ProblemTooLarge(usize),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("brand violation: {0}")]
    BrandViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
