//! Deterministic discrete-event simulation of PVH hosts and links.

mod gen;
mod metrics;
mod network;
mod topology;

use thiserror::Error;

pub use gen::{random_topology, GenParams};
pub use metrics::{
    classify_frame, sum_ctrl_tx, sum_sent, FrameClass, Metrics, NodeCounters, PingSample, Stage,
};
pub use network::{
    ClusterInfo, FrameRecord, HopDirection, HopRecord, MemberInfo, Network, ServiceAnswer,
    SimConfig,
};
pub use topology::{
    pseudo_mac, Attachment, LinkShape, LinkSpec, NodeSpec, Topology, TopologyError,
};

/// Virtual time in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("node {node} nic {nic} is not attached to any link")]
    UnattachedNic { node: String, nic: u8 },
    #[error("no node named {0:?}")]
    UnknownNode(String),
    #[error("{dst} unreachable from {src}")]
    Unreachable { src: String, dst: String },
    #[error("clustering did not converge by {0} us")]
    NotConverged(Micros),
    #[error("no mapping for {0}")]
    Unmapped(std::net::Ipv4Addr),
    #[error("{0}")]
    Tunnel(String),
    #[error("{0}")]
    Service(String),
}
