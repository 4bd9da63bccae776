use anyhow::{Context, Result};
use pvh::sim::{sum_ctrl_tx, sum_sent, Micros, Network, NodeCounters, Topology};
use pvh::wire::MsgType;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentKind, ExperimentSpec, Mode, ScenarioConfig};

/// Control messages that serve discovery and nothing else.
pub const DISCOVERY_TYPES: [MsgType; 4] = [
    MsgType::SvcQuery,
    MsgType::SvcRep,
    MsgType::ProbeReq,
    MsgType::ProbeRep,
];

pub const STAGES: [&str; 3] = ["stage1", "stage2", "stage3"];

/// Time allowed for registration floods to die out before stage 1 closes.
const REGISTRATION_SETTLE: Micros = 2_000_000;

/// One CSV line. The column set is the same for every experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub seed: u64,
    pub kind: &'static str,
    pub src: String,
    pub dst: String,
    pub hops: Option<usize>,
    pub seq: Option<u32>,
    pub value_us: String,
    pub first: Option<bool>,
    pub stage: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PingRecord {
    pub src: usize,
    pub dst: usize,
    pub bucket: usize,
    pub rtts: Vec<Micros>,
    pub first_route_msgs: u64,
    pub steady_route_msgs: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PingSweep {
    pub records: Vec<PingRecord>,
    pub skipped: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryRecord {
    pub querier: usize,
    pub name: String,
    pub provider: Option<usize>,
    pub latency: Micros,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServiceBench {
    /// Per-node counter deltas for each of the three stages.
    pub stages: Vec<Vec<NodeCounters>>,
    pub queries: Vec<QueryRecord>,
}

impl ServiceBench {
    pub fn stage_total(&self, i: usize) -> u64 {
        sum_ctrl_tx(&self.stages[i])
    }

    pub fn not_found(&self) -> usize {
        self.queries.iter().filter(|q| q.provider.is_none()).count()
    }

    /// Discovery messages sent in stage 3 per query issued.
    pub fn per_query(&self) -> f64 {
        sum_sent(&self.stages[2], &DISCOVERY_TYPES) as f64 / self.queries.len().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    PingSweep(PingSweep),
    ServiceBench(ServiceBench),
    ClusterDump(String),
}

pub struct Run {
    pub scenario: String,
    pub seed: u64,
    pub network: Network,
    pub outcome: Outcome,
}

const ROUTING_TYPES: [MsgType; 4] = [
    MsgType::RouteReq,
    MsgType::RouteRep,
    MsgType::ProbeReq,
    MsgType::ProbeRep,
];

fn routing_msgs(net: &Network) -> u64 {
    ROUTING_TYPES
        .iter()
        .map(|t| net.metrics().total_sent(*t))
        .sum()
}

fn rng_for(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ purpose)
}

/// Pings node pairs grouped by hop distance.
pub fn ping_sweep(net: &mut Network, spec: &ExperimentSpec, seed: u64) -> Result<PingSweep> {
    let hm = net.topology().hop_matrix();
    let n = net.node_count();
    let mut rng = rng_for(seed, 1);
    let mut out = PingSweep::default();
    for &h in &spec.buckets {
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|s| (0..n).map(move |d| (s, d)))
            .filter(|&(s, d)| hm[s][d] == Some(h))
            .collect();
        if pairs.is_empty() {
            out.skipped.push(h);
            continue;
        }
        pairs.shuffle(&mut rng);
        if let Some(k) = spec.pairs {
            pairs.truncate(k);
        }
        for (s, d) in pairs {
            let before = routing_msgs(net);
            let first = net.ping(s, d, 1).with_context(|| format!("bucket {h}"))?;
            let mid = routing_msgs(net);
            let rest = if spec.pings > 1 {
                net.ping(s, d, spec.pings - 1)?
            } else {
                Vec::new()
            };
            let after = routing_msgs(net);
            let rtts = first.iter().chain(&rest).map(|p| p.rtt_us).collect();
            out.records.push(PingRecord {
                src: s,
                dst: d,
                bucket: h,
                rtts,
                first_route_msgs: mid - before,
                steady_route_msgs: after - mid,
            });
        }
    }
    Ok(out)
}

/// Registers services, idles one keep-alive period, then queries them.
pub fn service_bench(
    net: &mut Network,
    spec: &ExperimentSpec,
    seed: u64,
    limit: Micros,
) -> Result<ServiceBench> {
    let n = net.node_count();
    anyhow::ensure!(n > 0, "empty topology");
    let mut rng = rng_for(seed, 2);
    net.mark_stage("start");
    if spec.mode == Mode::Cluster {
        net.converge(limit)?;
    }
    let names: Vec<String> = (0..spec.services).map(|i| format!("svc-{i:04}")).collect();
    for name in &names {
        let provider = rng.gen_range(0..n);
        net.register_service(provider, name)?;
    }
    net.run_for(REGISTRATION_SETTLE);
    net.mark_stage(STAGES[0]);
    net.run_for(net.config().protocol.service_keepalive);
    net.mark_stage(STAGES[1]);

    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    nodes.truncate(spec.queriers);
    let mut queries = Vec::new();
    for &q in &nodes {
        for _ in 0..spec.queries_per_querier {
            let Some(name) = names.choose(&mut rng) else {
                break;
            };
            let a = net.query_service(q, name)?;
            queries.push(QueryRecord {
                querier: q,
                name: name.clone(),
                provider: a.provider,
                latency: a.latency,
            });
        }
    }
    net.mark_stage(STAGES[2]);

    let m = net.metrics();
    let stages = [
        ("start", STAGES[0]),
        (STAGES[0], STAGES[1]),
        (STAGES[1], STAGES[2]),
    ]
    .iter()
    .map(|(a, b)| m.between(a, b).expect("stages were marked"))
    .collect();
    Ok(ServiceBench { stages, queries })
}

fn scenario_name(cfg: &ScenarioConfig) -> String {
    cfg.topo.as_ref().and_then(|p| p.file_stem()).map_or_else(
        || "scenario".to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub fn load_topology(cfg: &ScenarioConfig) -> Result<Topology> {
    let path = cfg.topo.as_ref().context("no topology given (--topo)")?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Topology::parse(&text).with_context(|| format!("parse error in {}", path.display()))
}

/// Builds the network from `cfg` and runs its experiment.
pub fn run(cfg: &ScenarioConfig) -> Result<Run> {
    let topo = load_topology(cfg)?;
    run_on(cfg, &topo)
}

pub fn run_on(cfg: &ScenarioConfig, topo: &Topology) -> Result<Run> {
    let mut net = Network::new(topo, cfg.seed, cfg.sim()?)?;
    let limit = cfg.converge_limit_ms * 1000;
    let spec = &cfg.experiment;
    if spec.kind != ExperimentKind::ServiceBench {
        net.converge(limit)?;
    }
    if let Some(t) = cfg.until_ms {
        net.run_until((t * 1000).max(net.now()));
    }
    let outcome = match spec.kind {
        ExperimentKind::PingSweep => Outcome::PingSweep(ping_sweep(&mut net, spec, cfg.seed)?),
        ExperimentKind::ServiceBench => {
            Outcome::ServiceBench(service_bench(&mut net, spec, cfg.seed, limit)?)
        }
        ExperimentKind::ClusterDump => Outcome::ClusterDump(net.cluster_report()),
    };
    Ok(Run {
        scenario: scenario_name(cfg),
        seed: cfg.seed,
        network: net,
        outcome,
    })
}

impl Run {
    fn row(&self, kind: &'static str, stage: &str) -> Row {
        Row {
            scenario: self.scenario.clone(),
            seed: self.seed,
            kind,
            src: String::new(),
            dst: String::new(),
            hops: None,
            seq: None,
            value_us: String::new(),
            first: None,
            stage: stage.to_string(),
        }
    }

    pub fn rows(&self) -> Vec<Row> {
        let net = &self.network;
        let name = |i: usize| net.name_of(i).to_string();
        let mut rows = Vec::new();
        match &self.outcome {
            Outcome::PingSweep(s) => {
                for r in &s.records {
                    for (k, rtt) in r.rtts.iter().enumerate() {
                        rows.push(Row {
                            src: name(r.src),
                            dst: name(r.dst),
                            hops: Some(r.bucket),
                            seq: Some(k as u32),
                            value_us: rtt.to_string(),
                            first: Some(k == 0),
                            ..self.row("rtt", "ping-sweep")
                        });
                    }
                }
            }
            Outcome::ServiceBench(b) => {
                for (i, stage) in STAGES.iter().enumerate() {
                    for (node, c) in b.stages[i].iter().enumerate() {
                        rows.push(Row {
                            src: name(node),
                            value_us: c.ctrl_tx.to_string(),
                            ..self.row("ctrl", stage)
                        });
                    }
                    rows.push(Row {
                        value_us: b.stage_total(i).to_string(),
                        ..self.row("ctrl_total", stage)
                    });
                }
                for (k, q) in b.queries.iter().enumerate() {
                    rows.push(Row {
                        src: name(q.querier),
                        dst: q.provider.map(name).unwrap_or_default(),
                        seq: Some(k as u32),
                        value_us: q.latency.to_string(),
                        ..self.row("discovery", STAGES[2])
                    });
                }
                rows.push(Row {
                    value_us: format!("{:.3}", b.per_query()),
                    ..self.row("msgs_per_query", STAGES[2])
                });
                rows.push(Row {
                    value_us: b.not_found().to_string(),
                    ..self.row("not_found", STAGES[2])
                });
            }
            Outcome::ClusterDump(_) => {}
        }
        rows
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let rows = self.rows();
        if rows.is_empty() {
            w.write_record([
                "scenario", "seed", "kind", "src", "dst", "hops", "seq", "value_us", "first",
                "stage",
            ])?;
        }
        for r in rows {
            w.serialize(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// What `run` writes: CSV, or the cluster listing for a dump.
    pub fn output(&self) -> Result<String> {
        match &self.outcome {
            Outcome::ClusterDump(text) => Ok(text.clone()),
            _ => self.csv(),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        match &self.outcome {
            Outcome::PingSweep(s) => s
                .skipped
                .iter()
                .map(|h| format!("skipped bucket {h}: no pair at that distance"))
                .collect(),
            Outcome::ServiceBench(b) if b.not_found() > 0 => {
                vec![format!("{} queries found no provider", b.not_found())]
            }
            _ => Vec::new(),
        }
    }
}
