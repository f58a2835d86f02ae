use thiserror::Error;

/// Errors raised by graph construction, exact enumeration and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertices unreachable from the root: {0:?}")]
    DisconnectedInput(Vec<usize>),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge list is empty")]
    EmptyInput,
    #[error("root {0} does not appear in the edge list")]
    UnknownRoot(usize),
    #[error(
        "radius {requested} needs level {needed}, but the graph only reaches level {available}"
    )]
    RadiusTooLarge {
        requested: usize,
        needed: usize,
        available: usize,
    },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("(v-2)(s-2) = {product} is not > 4 for v={v}, s={s}")]
    NotHyperbolic { v: usize, s: usize, product: i64 },
    #[error("infeasible degree: n={n}, k={k}")]
    InfeasibleDegree { n: usize, k: usize },
    #[error("no simple connected {k}-regular graph on {n} vertices after {attempts} attempts")]
    RetryBudgetExceeded { n: usize, k: usize, attempts: usize },
    #[error("vertex {0} lies on the outermost level")]
    BoundaryVertex(usize),
    #[error("{what}: size {size} exceeds the cap {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("graph is not regular (degrees range over {min}..={max})")]
    NotRegular { min: usize, max: usize },
    #[error("enumeration budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("graph is not growing (g = {0})")]
    NotGrowing(i64),
    #[error("bad region: {0}")]
    BadRegion(String),
    #[error("function has zero variance")]
    ZeroVariance,
    #[error("magnetization bound needs an odd number of spins, got {0}")]
    EvenN(usize),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("tiling construction failed: {0}")]
    Construction(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
