use crate::clustering::{ServiceMode, Weights};
use crate::sim::Micros;

const SECOND: Micros = 1_000_000;

/// Protocol timers, limits and weights. Times are virtual microseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    /// Hop range of capability broadcasts and head declarations.
    pub x: u8,
    pub weights: Weights,
    /// Run clustering, hellos and uploads. Off for push and pull service networks.
    pub clustering: bool,
    pub broadcast_phase: Micros,
    /// Delay from election to the join decision.
    pub join_delay: Micros,
    pub scan_period: Micros,
    /// How long a scanner waits for replies before choosing.
    pub scan_wait: Micros,
    /// Hop budget of a scan request.
    pub scan_hops: u8,
    pub hello_interval: Micros,
    pub neighbor_expiry_hellos: u32,
    pub upload_jitter_min: Micros,
    pub upload_jitter_max: Micros,
    pub offline_window_periods: u32,
    pub head_keepalive: Micros,
    pub probe_hop_limit: u8,
    pub dedup_ttl: Micros,
    pub route_ttl: Micros,
    pub route_request_timeout: Micros,
    pub probe_timeout: Micros,
    pub echo_timeout: Micros,
    pub query_timeout: Micros,
    /// Fixed cost of one forwarding step, delivery included.
    pub processing: Micros,
    pub service_mode: ServiceMode,
    pub service_keepalive: Micros,
    /// Hop budget of service pushes and pull-mode queries.
    pub service_hop_limit: u8,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            x: 2,
            weights: Weights::default(),
            clustering: true,
            broadcast_phase: 3 * SECOND,
            join_delay: SECOND,
            scan_period: 2 * SECOND,
            scan_wait: SECOND,
            scan_hops: 1,
            hello_interval: SECOND,
            neighbor_expiry_hellos: 3,
            upload_jitter_min: SECOND,
            upload_jitter_max: 2 * SECOND,
            offline_window_periods: 3,
            head_keepalive: 10 * SECOND,
            probe_hop_limit: 32,
            dedup_ttl: 10 * SECOND,
            route_ttl: 30 * SECOND,
            route_request_timeout: SECOND / 2,
            probe_timeout: 2 * SECOND,
            echo_timeout: SECOND,
            query_timeout: 3 * SECOND,
            processing: 10,
            service_mode: ServiceMode::Cluster,
            service_keepalive: 10 * SECOND,
            service_hop_limit: 32,
        }
    }
}

impl ProtocolConfig {
    pub fn neighbor_expiry(&self) -> Micros {
        self.hello_interval * Micros::from(self.neighbor_expiry_hellos)
    }

    /// Silence after which a head declares a member offline. One upload
    /// period equals one hello interval.
    pub fn offline_window(&self) -> Micros {
        self.hello_interval * Micros::from(self.offline_window_periods)
    }

    pub fn join_deadline(&self) -> Micros {
        self.broadcast_phase + self.join_delay
    }

    pub fn scan_round_start(&self, round: u32) -> Micros {
        self.join_deadline() + Micros::from(round) * self.scan_period
    }
}
