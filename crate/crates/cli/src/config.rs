use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pvh::clustering::{ServiceMode, Weights};
use pvh::sim::SimConfig;
use pvh::ProtocolConfig;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    PingSweep,
    ServiceBench,
    ClusterDump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Cluster,
    Push,
    Pull,
}

impl From<Mode> for ServiceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Cluster => ServiceMode::Cluster,
            Mode::Push => ServiceMode::Push,
            Mode::Pull => ServiceMode::Pull,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub mode: Mode,
    pub services: usize,
    pub queriers: usize,
    pub queries_per_querier: usize,
    pub buckets: Vec<usize>,
    pub pings: u32,
    /// Pairs per bucket; every pair when absent.
    pub pairs: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::PingSweep,
            mode: Mode::Cluster,
            services: 1000,
            queriers: 5,
            queries_per_querier: 20,
            buckets: (1..=6).collect(),
            pings: 5,
            pairs: None,
        }
    }
}

/// Protocol timers in microseconds and the remaining protocol limits.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timers {
    pub broadcast_phase_us: u64,
    pub join_delay_us: u64,
    pub scan_period_us: u64,
    pub scan_wait_us: u64,
    pub scan_hops: u8,
    pub hello_interval_us: u64,
    pub neighbor_expiry_hellos: u32,
    pub upload_jitter_min_us: u64,
    pub upload_jitter_max_us: u64,
    pub offline_window_periods: u32,
    pub head_keepalive_us: u64,
    pub probe_hop_limit: u8,
    pub dedup_ttl_us: u64,
    pub route_ttl_us: u64,
    pub route_request_timeout_us: u64,
    pub probe_timeout_us: u64,
    pub echo_timeout_us: u64,
    pub query_timeout_us: u64,
    pub processing_us: u64,
    pub service_keepalive_us: u64,
    pub service_hop_limit: u8,
}

impl Default for Timers {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        Timers {
            broadcast_phase_us: p.broadcast_phase,
            join_delay_us: p.join_delay,
            scan_period_us: p.scan_period,
            scan_wait_us: p.scan_wait,
            scan_hops: p.scan_hops,
            hello_interval_us: p.hello_interval,
            neighbor_expiry_hellos: p.neighbor_expiry_hellos,
            upload_jitter_min_us: p.upload_jitter_min,
            upload_jitter_max_us: p.upload_jitter_max,
            offline_window_periods: p.offline_window_periods,
            head_keepalive_us: p.head_keepalive,
            probe_hop_limit: p.probe_hop_limit,
            dedup_ttl_us: p.dedup_ttl,
            route_ttl_us: p.route_ttl,
            route_request_timeout_us: p.route_request_timeout,
            probe_timeout_us: p.probe_timeout,
            echo_timeout_us: p.echo_timeout,
            query_timeout_us: p.query_timeout,
            processing_us: p.processing,
            service_keepalive_us: p.service_keepalive,
            service_hop_limit: p.service_hop_limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkDefaults {
    pub wired_latency_us: u64,
    pub shared_latency_us: u64,
}

impl Default for LinkDefaults {
    fn default() -> Self {
        let s = SimConfig::default();
        LinkDefaults {
            wired_latency_us: s.wired_latency,
            shared_latency_us: s.shared_latency,
        }
    }
}

/// Everything one run needs. Loaded from TOML; command-line flags override.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topo: Option<PathBuf>,
    pub seed: u64,
    pub x: u8,
    pub weights: [f64; 3],
    /// Keep simulating until this virtual time before the experiment starts.
    pub until_ms: Option<u64>,
    pub converge_limit_ms: u64,
    pub experiment: ExperimentSpec,
    pub timers: Timers,
    pub links: LinkDefaults,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let w = Weights::default();
        ScenarioConfig {
            topo: None,
            seed: 42,
            x: 2,
            weights: [w.alpha, w.beta, w.gamma],
            until_ms: None,
            converge_limit_ms: 120_000,
            experiment: ExperimentSpec::default(),
            timers: Timers::default(),
            links: LinkDefaults::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid scenario config")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        let [a, b, g] = self.weights;
        let weights = Weights::new(a, b, g)?;
        let t = &self.timers;
        if t.upload_jitter_min_us > t.upload_jitter_max_us {
            bail!("upload_jitter_min_us exceeds upload_jitter_max_us");
        }
        if t.hello_interval_us == 0 {
            bail!("hello_interval_us must be positive");
        }
        let mode = self.experiment.mode;
        let bench = self.experiment.kind == ExperimentKind::ServiceBench;
        Ok(ProtocolConfig {
            x: self.x,
            weights,
            clustering: !bench || mode == Mode::Cluster,
            broadcast_phase: t.broadcast_phase_us,
            join_delay: t.join_delay_us,
            scan_period: t.scan_period_us,
            scan_wait: t.scan_wait_us,
            scan_hops: t.scan_hops,
            hello_interval: t.hello_interval_us,
            neighbor_expiry_hellos: t.neighbor_expiry_hellos,
            upload_jitter_min: t.upload_jitter_min_us,
            upload_jitter_max: t.upload_jitter_max_us,
            offline_window_periods: t.offline_window_periods,
            head_keepalive: t.head_keepalive_us,
            probe_hop_limit: t.probe_hop_limit,
            dedup_ttl: t.dedup_ttl_us,
            route_ttl: t.route_ttl_us,
            route_request_timeout: t.route_request_timeout_us,
            probe_timeout: t.probe_timeout_us,
            echo_timeout: t.echo_timeout_us,
            query_timeout: t.query_timeout_us,
            processing: t.processing_us,
            service_mode: mode.into(),
            service_keepalive: t.service_keepalive_us,
            service_hop_limit: t.service_hop_limit,
        })
    }

    pub fn sim(&self) -> Result<SimConfig> {
        Ok(SimConfig {
            protocol: self.protocol()?,
            wired_latency: self.links.wired_latency_us,
            shared_latency: self.links.shared_latency_us,
            hop_log: false,
            frame_log: false,
        })
    }
}
