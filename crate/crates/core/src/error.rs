use thiserror::Error;

/// Failure modes of the pipeline, one variant per rejection path.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
    #[error("potential is not confining on the domain (margin {margin:.3e})")]
    ConfinementViolation { margin: f64 },
    #[error("support search did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("support residual stalled at {residual:.3e}; support is probably not a single interval")]
    MultiCutSuspected { residual: f64 },
    #[error("degenerate interval: width {width:.3e}")]
    DegenerateInterval { width: f64 },
    #[error("equilibrium density is not generic: inf P = {margin:.3e}")]
    NotGeneric { margin: f64 },
    #[error("variational conditions fail: {0}")]
    VariationalFailure(String),
    #[error("transport ODE failed: {0}")]
    OdeFailure(String),
    #[error("edge series diverges: {0}")]
    SeriesDivergence(String),
    #[error("P vanishes at the edge {edge}")]
    ZeroLeadingP { edge: f64 },
    #[error("point {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("D is singular at the edge point {0}")]
    EdgeEvaluation(f64),
    #[error("grid has coincident nodes at index {0}")]
    CoincidentNodes(usize),
    #[error("chain mixes too slowly: autocorrelation time {tau:.1} sweeps exceeds budget {budget}")]
    PoorMixing { tau: f64, budget: usize },
    #[error("every proposal was rejected")]
    AllRejected,
    #[error("dimension {n} too large for direct quadrature (max {max})")]
    DimensionTooLarge { n: usize, max: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { got: usize, needed: usize },
    #[error("no gaps fall inside the window around {lambda0}")]
    EmptyWindow { lambda0: f64 },
    #[error("sample parameters differ: {0}")]
    MismatchedParameters(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed container: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid-spec",
            Error::ConfinementViolation { .. } => "confinement-violation",
            Error::NoConvergence { .. } => "no-convergence",
            Error::MultiCutSuspected { .. } => "multi-cut-suspected",
            Error::DegenerateInterval { .. } => "degenerate-interval",
            Error::NotGeneric { .. } => "not-generic",
            Error::VariationalFailure(_) => "variational-failure",
            Error::OdeFailure(_) => "ode-failure",
            Error::SeriesDivergence(_) => "series-divergence",
            Error::ZeroLeadingP { .. } => "zero-leading-P",
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::EdgeEvaluation(_) => "edge-evaluation",
            Error::CoincidentNodes(_) => "coincident-nodes",
            Error::PoorMixing { .. } => "poor-mixing",
            Error::AllRejected => "all-rejected",
            Error::DimensionTooLarge { .. } => "dimension-too-large",
            Error::InsufficientSamples { .. } => "insufficient-samples",
            Error::EmptyWindow { .. } => "empty-window",
            Error::MismatchedParameters(_) => "mismatched-parameters",
            Error::Precondition(_) => "precondition-violation",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
