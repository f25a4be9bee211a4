use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("undeclared identifier `{name}` at line {line}, column {col}")]
    Undeclared { name: String, line: usize, col: usize },

    #[error("arity mismatch for `{name}`: expected {expected} arguments, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("division by zero")]
    DivisionByZero,

    #[error("conflicting substitution rules for `{0}`")]
    ConflictingRules(String),

    #[error("inconclusive zero test: normal form `{0}` is nonzero but vanished at every sample point")]
    Inconclusive(String),

    #[error("rewrite depth bound {0} exceeded")]
    DepthExceeded(usize),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("rank condition fails: {0}")]
    Rank(String),

    #[error("family `{0}` is not involutive")]
    NotInvolutive(String),

    #[error("no invertible minor on the working chart: {0}")]
    Chart(String),

    #[error("substitution does not terminate: {0}")]
    Cyclic(String),

    #[error("no stored flow for generator `{0}`")]
    NoFlow(String),

    #[error("point transformation has no inverse map")]
    MissingInverse,

    #[error("leading derivative not re-solvable: {0}")]
    NotResolvable(String),

    #[error("invalid ansatz: {0}")]
    Ansatz(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("unknown catalog id `{0}`")]
    UnknownId(String),

    #[error("{0}")]
    Invalid(String),
}
