use crate::active::FunctionId;
use crate::rational::Rational;
use crate::set::ElementId;

/// Errors from the value-oracle layer and its containers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("element {element} is outside the ground set of size {ground_size}")]
    UnknownElement {
        element: ElementId,
        ground_size: usize,
    },
    #[error("cost of element {element} must be strictly positive, got {cost}")]
    NonPositiveCost { element: ElementId, cost: Rational },
    #[error("invalid function description: {0}")]
    InvalidFunction(String),
    #[error("verification cap exceeded: ground set has {n} elements, cap is {cap}")]
    VerificationCapExceeded { n: usize, cap: usize },
    #[error("degenerate function: every singleton value is zero")]
    DegenerateFunction,
    #[error("function id {0} is already live")]
    DuplicateFunction(FunctionId),
    #[error("function id {0} is not live")]
    UnknownFunction(FunctionId),
    #[error("function is defined on {found} elements, expected {expected}")]
    GroundSizeMismatch { expected: usize, found: usize },
}

/// Contract violations and diagnostics from the permutation engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("no legal swap at position {position}")]
    IllegalSwap { position: usize },
    #[error("illegal gamma-move of element {element} from {from} to {to}")]
    IllegalMove {
        element: ElementId,
        from: usize,
        to: usize,
    },
    #[error("element {0} is not in the permutation")]
    MissingElement(ElementId),
    #[error("element {0} is already in the permutation")]
    DuplicateElement(ElementId),
    #[error("non-termination suspected after {moves} moves (cap {cap}); state: {dump}")]
    NonTermination {
        moves: usize,
        cap: usize,
        dump: String,
    },
}

/// Errors raised while driving a dynamic run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("declared fmin {declared} violated by observed marginal {observed}")]
    FminViolated {
        declared: Rational,
        observed: Rational,
    },
    #[error("invalid event at t={t}: {reason}")]
    InvalidEvent { t: usize, reason: String },
    #[error("probe found no candidate element for uncovered function {0}")]
    EmptyProbe(FunctionId),
    #[error("function {0} is not a junta")]
    NotAJunta(FunctionId),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solution at t={t} does not cover the live functions")]
    Infeasible { t: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Problems constructing or applying a potential function.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("potential {potential} cannot be evaluated in {mode:?} mode")]
    IncompatibleMode {
        potential: &'static str,
        mode: crate::permutation::MffMode,
    },
    #[error("h fails its structural checks: {0}")]
    InvalidH(String),
}

/// Malformed or inconsistent trace files.
#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Function { line: usize, source: CoreError },
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
