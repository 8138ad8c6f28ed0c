use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid literal `{literal}`: {reason}")]
    Literal { literal: String, reason: String },

    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("dimension mismatch: blocks span {blocks} coordinates but n = {n}")]
    DimensionMismatch { n: usize, blocks: usize },

    #[error("undeclared symbol `{symbol}` in `{field}`")]
    UndeclaredSymbol { symbol: String, field: String },

    #[error("modification hypothesis not satisfied: {0}")]
    ModificationHypothesis(String),

    #[error("oracle unavailable for this spectrum: {0}")]
    OracleUnavailable(String),

    #[error("degree {requested} exceeds the available bound {bound}")]
    DegreeBound { requested: usize, bound: usize },

    #[error("invalid degree bound {0}: must be at least 1")]
    InvalidDegreeBound(usize),

    #[error("symplectic undefined: total dimension {0} is odd")]
    SymplecticUndefined(usize),

    #[error("top coefficient requested on a degree-{degree} multivector in dimension {n}")]
    NotTopDegree { degree: usize, n: usize },

    #[error("symbolic product is not linear: {0}")]
    NonlinearSymbolic(String),

    #[error("malformed report: {0}")]
    MalformedReport(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Errors caused by the caller's input rather than by the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
