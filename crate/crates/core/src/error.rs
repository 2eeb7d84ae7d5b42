use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is not inside the domain `{domain}`")]
    NotInDomain { domain: String },
    #[error("point lies outside the domain of the kernel model `{domain}`")]
    OutsideDomain { domain: String },
    #[error("no Cayley chart registered for `{0}`")]
    NoChart(String),
    #[error("no kernel construction available for `{0}`")]
    UnsupportedDomain(String),
    #[error("quadrature unavailable: {0}")]
    QuadratureUnavailable(String),
    #[error("degenerate metric at {point}: smallest eigenvalue {min_eig:e}")]
    DegenerateMetric { point: String, min_eig: f64 },
    #[error("geodesic left the trusted region after length {length:.6}")]
    LeftDomain { length: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("unknown scaling class: {0}")]
    UnknownClass(String),
    #[error("approach point {index} leaves the cone of aperture {aperture}")]
    ApproachLeavesCone { index: usize, aperture: f64 },
    #[error("no embedding in the family contains the smallest Bergman ball ({0})")]
    NoEmbeddingFound(String),
    #[error("unsupported intersection: {0}")]
    UnsupportedIntersection(String),
    #[error("invalid domain identifier `{0}`")]
    UnknownDomainId(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed moment table line {line}: {reason}")]
    MomentTableParse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
