use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(String, String),
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("edge {{{u}, {v}}} has non-positive weight {weight}")]
    NonPositiveWeight { u: String, v: String, weight: String },
    #[error("vertex `{vertex}` has non-positive weight {weight}")]
    NonPositiveVertexWeight { vertex: String, weight: String },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is disconnected: `{0}` is unreachable from `{1}`")]
    Disconnected(String, String),
    #[error("`{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),
    #[error("function is not defined at `{0}`")]
    OutsideDomain(String),
    #[error("enumeration budget of {budget} nodes exceeded on edge {{{x}, {y}}}")]
    BudgetExceeded { x: String, y: String, budget: u64 },
    #[error("stencil leaves the window: {0}")]
    OutOfWindow(String),
    #[error("window radius {have} too small, need at least {need}")]
    WindowTooSmall { need: i64, have: i64 },
    #[error("only {usable} usable shells, need at least {need}")]
    InsufficientShells { usable: usize, need: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("generator matrix is singular")]
    SingularMatrix,
    #[error("degenerate quotient: {0}")]
    DegenerateQuotient(String),
    #[error("inconsistent weights: {0}")]
    InconsistentWeights(String),
    #[error("function is not {k}-Lipschitz on the pair ({u}, {v})")]
    NotLipschitz { u: String, v: String, k: String },
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
