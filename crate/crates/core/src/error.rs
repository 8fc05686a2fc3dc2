use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("structural mismatch: {0}")]
    Mismatch(String),

    #[error("non-finite sample in {0}")]
    NonFinite(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point} outside domain [{lower}, {upper}]")]
    Domain { point: f64, lower: f64, upper: f64 },

    #[error("singular point {point}: reference density {density:e} below tolerance")]
    SingularPoint { point: f64, density: f64 },

    #[error("point {0} carries an atom")]
    AtomAtPoint(f64),

    #[error("degenerate contraction: set {index} has zero reference mass")]
    DegenerateContraction { index: usize },

    #[error("resolution floor reached: {0}")]
    Resolution(String),

    #[error("zero-mass cell [{lo}, {hi}) at level {level}")]
    Positivity { level: usize, lo: f64, hi: f64 },

    #[error("multiplier outside the operator domain: {0}")]
    UnboundedDomain(String),

    #[error("absolute continuity violated at {point}: {what}")]
    AbsoluteContinuity { point: f64, what: String },

    #[error("isomorphism undefined: {0}")]
    IsoDomain(String),

    #[error("point {0} lies in the exclusion set")]
    Excluded(f64),

    #[error("channel {k} unavailable at {point} (multiplicity {multiplicity})")]
    Channel { k: usize, point: f64, multiplicity: usize },

    #[error("vector is not a test function: {0}")]
    NotTestFunction(String),

    #[error("atomic spectrum: {0}")]
    AtomicSpectrum(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("multiplier is not an indicator: {0}")]
    NotAProjection(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
