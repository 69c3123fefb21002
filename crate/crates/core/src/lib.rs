//! Coded-caching content delivery in multi-AP wireless LANs.
//!
//! Helpers (access points) share one channel under a broadcast/collision
//! model; users cache content according to one of `L` shared cache profiles
//! and are served with XOR multicast codewords. The crate computes the
//! per-user throughput region, maximizes alpha-fair utility over it (over the
//! full region, a restricted region, or the super-user region) and runs the
//! Random Greedy Association scheduler as an online alternative.
//!
//! Module map:
//!
//! - [`topology`]: helper grid, Poisson user placement, reachability.
//! - [`cache`]: cache profiles, placement predicate, profile classes.
//! - [`codebook`]: feasible sets and XOR codeword construction.
//! - [`policy`]: activation patterns, policies, rate vectors, dominance.
//! - [`fairness`]: alpha-fair utility maximization over the rate hull.
//! - [`superuser`]: one policy per pattern with equal intra-class splits.
//! - [`rga`]: the greedy association scheduler.
//! - [`harness`]: run configuration, experiments and reports.

pub mod cache;
pub mod codebook;
pub mod combin;
pub mod fairness;
pub mod harness;
pub mod policy;
pub mod rga;
pub mod rng;
pub mod superuser;
pub mod topology;

use thiserror::Error;

/// Any failure of a pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Cache(#[from] cache::CacheError),
    #[error(transparent)]
    Codebook(#[from] codebook::CodebookError),
    #[error(transparent)]
    Policy(#[from] policy::PolicyError),
    #[error(transparent)]
    Fairness(#[from] fairness::FairnessError),
    #[error(transparent)]
    Rga(#[from] rga::RgaError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<superuser::SuperUserError> for Error {
    fn from(e: superuser::SuperUserError) -> Self {
        match e {
            superuser::SuperUserError::Policy(e) => Error::Policy(e),
            superuser::SuperUserError::Fairness(e) => Error::Fairness(e),
        }
    }
}

impl Error {
    /// Process exit code: 2 for infeasible problems, 3 for exhausted budgets
    /// and stalled schedulers, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Fairness(fairness::FairnessError::Infeasible { .. })
            | Error::Fairness(fairness::FairnessError::NonPositiveRate { .. }) => 2,
            Error::Fairness(fairness::FairnessError::BudgetExceeded { .. })
            | Error::Policy(policy::PolicyError::BudgetExceeded { .. })
            | Error::Policy(policy::PolicyError::TooManyHelpers(_))
            | Error::Rga(rga::RgaError::Stalled { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
