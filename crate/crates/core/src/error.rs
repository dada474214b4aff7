use thiserror::Error;

/// Errors produced by the solvers and their supporting kernels.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("SVD kernel failed to converge")]
    SvdFailed,
    #[error("requested rank {requested} exceeds the actual rank: sigma_{requested} = 0")]
    RankDeficient { requested: usize },
    #[error("rank-deficient Jacobian at step {step}: sigma_{rank} = 0")]
    JacobianRankDeficient { rank: usize, step: usize },
    #[error("thin QR failed: column {col} is numerically dependent on earlier columns")]
    QrRankDeficient { col: usize },
    #[error("subspace bases have unequal dimensions: {left} vs {right}")]
    SubspaceDimMismatch { left: usize, right: usize },
    #[error("structured value does not match layout component {component}: {msg}")]
    ShapeMismatch { component: usize, msg: String },
    #[error("invalid projection rank {rank} for a {rows}x{cols} Jacobian")]
    InvalidRank {
        rank: usize,
        rows: usize,
        cols: usize,
    },
    #[error("polynomial parse error at byte {pos}: {msg}")]
    PolyParse { pos: usize, msg: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("monomial support error: {0}")]
    BadSupport(String),
    #[error("matrix text parse error on line {line}: {msg}")]
    MatrixParse { line: usize, msg: String },
    #[error("complex number parse error in `{text}`")]
    ComplexParse { text: String },
    #[error("evaluation produced non-finite values")]
    NonFiniteEval,
    #[error("mapping failed the linearity spot check (defect {defect:.3e})")]
    NotLinear { defect: f64 },
    #[error("numerical rank is 0 at the given tolerance ({})", if *.homogeneous { "homogeneous system: every vector is a trivial solution" } else { "right-hand side projects to nothing" })]
    ZeroRank { homogeneous: bool },
    #[error("degenerate subresultant null vector: cofactor {which} has deficient degree")]
    DegenerateNullVector { which: &'static str },
    #[error("hosting space violation: {0}")]
    HostingViolation(String),
    #[error("kernel dimension {found} does not match multiplicity support m*k = {expected}")]
    SupportMismatch { expected: usize, found: usize },
    #[error("zero factor cannot be gauge-normalized")]
    ZeroFactor,
    #[error("invalid shift matrix: {0}")]
    BadShiftMatrix(String),
    #[error("nothing to deflate: rank {rank} is not below the domain dimension {dim}")]
    NothingToDeflate { rank: usize, dim: usize },
    #[error("deflation depth {depth} exhausted without regularization; last status: {last_status}")]
    DeflationExhausted { depth: usize, last_status: String },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category, used by the CLI and the C API.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyMatrix
            | Error::NonFiniteEntry { .. }
            | Error::PolyParse { .. }
            | Error::UnknownVariable { .. }
            | Error::BadSupport(_)
            | Error::MatrixParse { .. }
            | Error::ComplexParse { .. }
            | Error::InvalidOption(_)
            | Error::Io(_) => "parse",
            Error::DimensionMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::SubspaceDimMismatch { .. }
            | Error::InvalidRank { .. }
            | Error::BadShiftMatrix(_) => "usage",
            _ => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
