use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("unbound name `{0}`")]
    Unbound(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hessian asymmetry {asymmetry:e} exceeds tolerance")]
    AsymmetricHessian { asymmetry: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("system file: {0}")]
    SystemFile(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("singular representation: {intensive} = {value:e} vanishes at this point (representation {variable})")]
    SingularRepresentation {
        variable: String,
        intensive: String,
        value: f64,
    },

    #[error("degenerate conformal prefactor: {0}")]
    DegenerateConformal(String),

    #[error("ill-conditioned change of coordinates (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
