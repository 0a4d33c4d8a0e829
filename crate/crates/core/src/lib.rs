pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oracles;
pub mod problems;

pub use error::{Error, Result};
pub use numerics::{BlockDiagMatrix, DenseMatrix, Vector};
pub use algorithms::{AlgorithmId, Method, MemoryInit, Schedule, Status, StepRule, Trajectory};
pub use harness::{AggregateResult, ExperimentConfig, MetricKind};
pub use oracles::{DeterministicOperator, SampleTicket, StochasticOracle};
pub use problems::{Problem, ProblemSpec};
