//! Fully-dynamic submodular cover with bounded recourse.
//!
//! Functions arrive and depart over time; their sum is the coverage
//! requirement. A permutation of the ground set is kept locally stable under
//! swaps and γ-moves, and the elements with positive marginal value form the
//! maintained cover. Potential functions audit how much the solution can
//! change.

pub mod active;
pub mod combiner;
pub mod dynamic;
pub mod error;
pub mod function;
pub mod ground;
pub mod harness;
pub mod oracles;
pub mod permutation;
pub mod potentials;
pub mod rational;
pub mod rjunta;
pub mod set;
pub mod trace;
pub mod trees;
pub mod verify;

pub use active::{ActiveSet, FunctionId};
pub use combiner::{bucket_count, BucketRouter, Child, CombinedRecord};
pub use dynamic::{Action, CoverConfig, DynamicCover, Event, EventKind, StepRecord};
pub use error::{CoreError, EngineError, PotentialError, RunError, TraceError};
pub use function::{FunctionKind, SetFunction, SubmodularFunction};
pub use ground::GroundSet;
pub use harness::{
    parse_gamma, run_trace, AuditChoice, MetricsRow, OracleKind, RunMode, RunOptions, RunOutput,
    RunSummary,
};
pub use oracles::{
    brute_force_cover, exact_mst, exact_steiner, offline_greedy, OptMethod, OptResult, TreeOpt,
};
pub use permutation::{
    GammaMove, MffMode, Move, MoveCap, MoveOutcome, PermutationEngine, Snapshot, StabilizeLog,
};
pub use potentials::{
    audit_event, AtomicEvent, AuditParams, PotentialSpec, PowerLaw, PropertyAudit,
};
pub use rational::Rational;
pub use rjunta::{JuntaRecord, JuntaState, JuntaTotals};
pub use set::{ElementId, ElementSet};
pub use trace::{generate, FunctionSpec, GenKind, GenParams, Trace, TraceEvent, TraceHeader};
pub use trees::{
    Metric, TreeMaintainer, TreeMode, TreeStepRecord, TreeTotals, VertexEvent, VertexId,
};
pub use verify::{bounds_of, verify_3increasing, verify_submodular, ValueBounds};
