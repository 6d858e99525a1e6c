use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by mesh generation, assembly, and the eigensolver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter violates a precondition.
    InvalidInput(String),
    /// Mesh file could not be parsed.
    MeshParse(String),
    /// Mesh connectivity is not a conforming triangulation.
    NonConforming(String),
    /// A cell has non-positive signed area.
    InvertedCell(usize),
    /// A geometric map is degenerate (|det J| below tolerance).
    DegenerateCell(usize),
    /// The moment-DOF Vandermonde matrix is singular or too ill-conditioned.
    SingularVandermonde { order: usize, cond: f64 },
    /// Sparse factorization of the shifted pencil failed.
    FactorizationFailed(String),
    /// The Krylov iteration did not converge within the restart budget.
    NoConvergence { wanted: usize, converged: usize, restarts: usize },
    /// Fewer finite eigenvalues exist than were requested.
    NotEnoughModes { wanted: usize, available: usize },
    /// Matrix/vector dimensions do not line up.
    DimensionMismatch(String),
    /// A size cap of the dense oracle path was exceeded.
    OracleSizeExceeded { dofs: usize, cap: usize },
    /// Failure inside one cell of a refinement study, annotated with the
    /// (ν, k, N) coordinates of that cell.
    Study { nu: f64, k: usize, n: usize, source: Box<Error> },
    /// File I/O failure, carrying the offending path.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::MeshParse(m) => write!(f, "mesh parse error: {m}"),
            Error::NonConforming(m) => write!(f, "non-conforming mesh: {m}"),
            Error::InvertedCell(c) => write!(f, "cell {c} has non-positive orientation"),
            Error::DegenerateCell(c) => write!(f, "cell {c} is geometrically degenerate"),
            Error::SingularVandermonde { order, cond } => {
                write!(f, "RT_{order} moment matrix is ill-conditioned (cond = {cond:.3e})")
            }
            Error::FactorizationFailed(m) => write!(f, "sparse factorization failed: {m}"),
            Error::NoConvergence { wanted, converged, restarts } => write!(
                f,
                "eigensolver converged {converged}/{wanted} modes after {restarts} restarts"
            ),
            Error::NotEnoughModes { wanted, available } => {
                write!(f, "requested {wanted} modes but only {available} finite modes exist")
            }
            Error::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            Error::OracleSizeExceeded { dofs, cap } => {
                write!(f, "oracle size cap exceeded: {dofs} DOFs > {cap}")
            }
            Error::Study { nu, k, n, source } => {
                write!(f, "study cell (nu = {nu}, k = {k}, N = {n}): {source}")
            }
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
