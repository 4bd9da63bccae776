//! Cluster formation and upkeep: capability flooding, head election,
//! invitation and scan-join, hellos, neighbor-table uploads and service
//! registries.

mod capability;
mod discovery;
mod membership;
mod neighbor;
mod protocol;
mod service;

use thiserror::Error;

pub use capability::{capability_value, is_local_maximum, Capability, Rank, Weights};
pub use membership::{ClusterMembership, Role};
pub use neighbor::{NeighborEntry, NeighborTable};
pub use service::{validate_service_name, ServiceMode, ServiceRecord, ServiceRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("weights ({0}, {1}, {2}) must be non-negative and sum to 1")]
    InvalidWeights(f64, f64, f64),
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("invalid service name {0:?}")]
    InvalidServiceName(String),
}
