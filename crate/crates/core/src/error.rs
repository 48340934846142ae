use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One arc of an infeasibility certificate: `x[to] - x[from] <= bound`,
/// with 1-based agents and an exactly rendered bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleArc {
    pub from: usize,
    pub to: usize,
    pub bound: String,
}

/// A negative cycle in the difference-constraint graph. Consecutive arcs
/// meet in the same equality class, and the bounds sum to `total < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleCycle {
    pub arcs: Vec<CycleArc>,
    pub total: String,
}

impl InfeasibleCycle {
    pub fn agents(&self) -> Vec<usize> {
        self.arcs.iter().map(|a| a.from).collect()
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop on agent {agent}")]
    SelfLoop { line: usize, agent: usize },

    #[error("line {line}: weight of edge ({i},{j}) must be positive")]
    NonPositiveWeight { line: usize, i: usize, j: usize },

    #[error("line {line}: edge ({i},{j}) listed again with a different weight")]
    ConflictingEdge { line: usize, i: usize, j: usize },

    #[error("agent {agent} out of range 1..={n}")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("graph is not connected: agent {agent} unreachable from agent {root}")]
    Disconnected { root: usize, agent: usize },

    #[error("not a number: {0:?}")]
    Number(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("gain condition failed: {0}")]
    GainGate(String),

    #[error("half-period m={m} leaves the interval of edge ({i},{j}) empty")]
    EmptyInterval { m: u64, i: usize, j: usize },

    #[error("position constraints infeasible: negative cycle through agents {:?} with total {}", .0.agents(), .0.total)]
    Infeasible(InfeasibleCycle),

    #[error("agents {i} and {j} are forced equal but their interval excludes zero")]
    ConflictingEquality { i: usize, j: usize },

    #[error("key inequality fails on edge ({i},{j})")]
    KeyInequality { i: usize, j: usize },

    #[error("exact arithmetic exceeded {limit} bits at step {step}")]
    ResourceLimit { step: usize, limit: u64 },

    #[error("pair (A, B) is not controllable")]
    NotControllable,

    #[error("unsupported spectrum: {0}")]
    Spectrum(String),

    #[error("trajectory too short: {len} states, need {needed}")]
    TrajectoryTooShort { len: usize, needed: usize },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
