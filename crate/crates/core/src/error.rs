use thiserror::Error;

#[derive(Debug, Error)]
pub enum TentError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ball of radius {radius} around {center:?} contains no lattice point")]
    EmptyBall { center: Vec<f64>, radius: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("heat kernel at s = {s} needs a window of {needed} cells, the domain only spans {available}")]
    HeatWindow { s: f64, needed: usize, available: usize },

    #[error("symbol `{name}` is not finite at frequency {omega}")]
    SymbolNotFinite { name: String, omega: f64 },

    #[error("open set touches the domain boundary; its complement is not representable")]
    TouchesBoundary,

    #[error("{} support cells are not covered by any region (first: {:?})", .cells.len(), .cells.first())]
    UncoveredSupport { cells: Vec<(usize, usize)> },

    #[error("input is not cancelling: level {level} has normalized slice integral {defect:e}")]
    NotCancelling { level: usize, defect: f64 },

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<TentError>,
    },

    #[error("not an HSF1 file: {0}")]
    BadMagic(String),

    #[error("corrupt HSF1 header: {0}")]
    CorruptHeader(String),

    #[error("payload length mismatch: header implies {expected} bytes, found {actual}")]
    PayloadLength { expected: usize, actual: usize },

    #[error("need at least {needed} usable points, have {available}")]
    TooFewPoints { needed: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TentError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> TentError {
    TentError::InvalidParameter(msg.into())
}
