//! PVH: a table-free source-routing network layer with capability-based
//! clustering, and a deterministic simulator to run it.
//!
//! * [`wire`] encodes data-plane packets and control frames.
//! * [`forwarding`] is the per-hop forwarding step and reverse-path handling.
//! * [`clustering`] and [`routing`] hold the control-plane state and handlers.
//! * [`tunnel`] carries IPv4 datagrams inside PVH packets.
//! * [`node`] ties these into a sans-IO host state machine.
//! * [`sim`] wires hosts together over simulated links in virtual time.

pub mod clustering;
pub mod config;
pub mod forwarding;
pub mod node;
pub mod routing;
pub mod sim;
pub mod tunnel;
pub mod wire;

pub use config::ProtocolConfig;
