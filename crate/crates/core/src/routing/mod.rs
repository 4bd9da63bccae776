//! Head-side shortest paths over uploaded topology, member-side route
//! resolution with caching, and deduplicated probe floods between clusters.

mod bfs;
mod cache;
mod protocol;
mod topology;

use thiserror::Error;

pub use bfs::{bfs_route, path_to_pv};
pub use cache::{ProbeDedup, RouteCache};
pub use topology::{Edge, EdgeLabel, TopologyGraph};

use crate::wire::NodeAddr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("no path to {0}")]
    NoPath(NodeAddr),
    #[error("{0} is not in the topology")]
    UnknownNode(NodeAddr),
    #[error("no usable edge {0} -> {1}")]
    MissingEdge(NodeAddr, NodeAddr),
    #[error("path vector too long")]
    PathTooLong,
}
