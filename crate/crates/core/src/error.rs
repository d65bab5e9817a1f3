use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("spatial dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("operands live in different variable environments")]
    EnvMismatch,
    #[error("cannot differentiate with respect to parameter `{0}`")]
    ParameterDerivative(String),
    #[error("binding for `{0}` mentions `{0}` itself")]
    RecursiveSubstitution(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not a valid parameter name")]
    BadVariableName(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("{what} index {index} out of range (must be < {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("degree {k} out of range for {what}: valid degrees are {lo}..={hi}")]
    DegreeOutOfRange {
        what: String,
        k: usize,
        lo: usize,
        hi: usize,
    },
    #[error("{what}: expected {expected} entries, found {found}")]
    Arity {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("vector field component {0} contains parameter variables")]
    ParametricField(usize),
    #[error("parameter entry `{0}` contains spatial variables")]
    SpatialParameter(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(
        "invalid obstruction cell (k = {k}, shift = {shift}) for n = {n}; valid cells: {valid}"
    )]
    InvalidCell {
        n: usize,
        k: usize,
        shift: usize,
        valid: String,
    },
    #[error("{0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
