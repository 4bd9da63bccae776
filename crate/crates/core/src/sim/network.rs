use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::metrics::{classify_frame, FrameClass, Metrics, PingSample};
use super::topology::{pseudo_mac, LinkShape, Topology, TopologyError};
use super::{Micros, SimError};
use crate::clustering::Role;
use crate::config::ProtocolConfig;
use crate::forwarding::LinkKind;
use crate::node::{Ctx, NicInfo, Node, NodeEvent, Output, Timer};
use crate::tunnel::ipv4_destination;
use crate::wire::{
    MacAddr, MsgType, NicId, NodeAddr, PacketKind, PathVector, PvhPacket, ETHERTYPE_PVH_DATA,
};

/// Ethernet minimum payload; shorter frames are zero padded.
const MIN_FRAME_PAYLOAD: usize = 46;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub protocol: ProtocolConfig,
    pub wired_latency: Micros,
    pub shared_latency: Micros,
    /// Record every PVH data-plane transmission and reception.
    pub hop_log: bool,
    /// Record every control frame transmission.
    pub frame_log: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            protocol: ProtocolConfig::default(),
            wired_latency: 100,
            shared_latency: 2000,
            hop_log: false,
            frame_log: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HopDirection {
    Tx,
    Rx,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopRecord {
    pub at: Micros,
    pub node: usize,
    pub dir: HopDirection,
    pub kind: PacketKind,
    pub src: NodeAddr,
    pub dst: NodeAddr,
}

/// One control frame put on a link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub at: Micros,
    pub node: usize,
    pub nic: NicId,
    pub msg_type: MsgType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberInfo {
    pub node: usize,
    pub join_round: u32,
    pub distance: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterInfo {
    pub head: usize,
    pub capability: f64,
    pub members: Vec<MemberInfo>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceAnswer {
    pub provider: Option<usize>,
    pub latency: Micros,
}

struct Report {
    node: usize,
    event: NodeEvent,
}

struct SimLink {
    kind: LinkKind,
    latency: Micros,
    loss: f64,
    ends: Vec<(usize, NicId, MacAddr)>,
}

struct Slot {
    node: Node,
    online: bool,
    epoch: u64,
    ports: BTreeMap<NicId, (usize, MacAddr)>,
}

enum Action {
    Frame {
        to: usize,
        nic: NicId,
        smac: MacAddr,
        ethertype: u16,
        bytes: Vec<u8>,
        control: bool,
    },
    Timer {
        node: usize,
        epoch: u64,
        timer: Timer,
    },
}

struct Event {
    at: Micros,
    seq: u64,
    action: Action,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: BinaryHeap is a max-heap
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// A simulated network of PVH hosts.
pub struct Network {
    cfg: SimConfig,
    topology: Topology,
    slots: Vec<Slot>,
    links: Vec<SimLink>,
    by_addr: BTreeMap<NodeAddr, usize>,
    ipmap: BTreeMap<Ipv4Addr, usize>,
    queue: BinaryHeap<Event>,
    now: Micros,
    seq: u64,
    rng: ChaCha8Rng,
    metrics: Metrics,
    reports: Vec<Report>,
    trace: Sha256,
    hop_log: Vec<HopRecord>,
    frame_log: Vec<FrameRecord>,
    next_session: u32,
    next_query: u32,
}

fn node_seed(seed: u64, name: &str) -> u64 {
    let d = Sha256::new()
        .chain_update(seed.to_be_bytes())
        .chain_update(b"node")
        .chain_update(name.as_bytes())
        .finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

impl Network {
    /// Builds the network and boots every node at time zero.
    pub fn new(topology: &Topology, seed: u64, cfg: SimConfig) -> Result<Network, SimError> {
        let index: BTreeMap<&str, usize> = topology
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        if index.len() != topology.nodes.len() {
            return Err(TopologyError::Parse {
                line: 0,
                msg: "duplicate node name".into(),
            }
            .into());
        }

        let mut taken: BTreeMap<MacAddr, ()> = BTreeMap::new();
        let mut mac_of = |name: &str, nic: u8| {
            let mut salt = 0;
            loop {
                let m = pseudo_mac(seed, name, nic, salt);
                if taken.insert(m, ()).is_none() {
                    return m;
                }
                salt += 1;
            }
        };

        let mut ports: Vec<BTreeMap<NicId, (usize, MacAddr)>> =
            vec![BTreeMap::new(); topology.nodes.len()];
        let mut links = Vec::with_capacity(topology.links.len());
        let mut nic_infos: Vec<Vec<NicInfo>> = vec![Vec::new(); topology.nodes.len()];
        for (li, l) in topology.links.iter().enumerate() {
            let kind = if l.is_shared() {
                LinkKind::Shared
            } else {
                LinkKind::PointToPoint
            };
            if let LinkShape::Shared { name, attachments } = &l.shape {
                if attachments.len() < 2 {
                    return Err(TopologyError::TooFewAttachments(name.clone()).into());
                }
            }
            let mut ends = Vec::new();
            for a in l.attachments() {
                let &n = index.get(a.node.as_str()).ok_or_else(|| {
                    TopologyError::DanglingAttachment {
                        line: 0,
                        what: "attachment",
                        target: a.node.clone(),
                    }
                })?;
                if ports[n].contains_key(&a.nic) {
                    return Err(TopologyError::DuplicateNic {
                        line: 0,
                        node: a.node.clone(),
                        nic: a.nic.get(),
                    }
                    .into());
                }
                let mac = mac_of(&a.node, a.nic.get());
                ports[n].insert(a.nic, (li, mac));
                nic_infos[n].push(NicInfo {
                    id: a.nic,
                    mac,
                    link: kind,
                });
                ends.push((n, a.nic, mac));
            }
            let latency = l.latency_us.unwrap_or(match kind {
                LinkKind::Shared => cfg.shared_latency,
                LinkKind::PointToPoint => cfg.wired_latency,
            });
            links.push(SimLink {
                kind,
                latency,
                loss: l.loss,
                ends,
            });
        }

        let mut slots = Vec::with_capacity(topology.nodes.len());
        let mut by_addr = BTreeMap::new();
        for (i, spec) in topology.nodes.iter().enumerate() {
            // the address is the MAC of the lowest-numbered NIC
            let addr = match ports[i].iter().next() {
                Some((_, (_, mac))) => NodeAddr::from(*mac),
                None => NodeAddr::from(mac_of(&spec.name, 0)),
            };
            let capability =
                spec.capability
                    .value(&cfg.protocol.weights)
                    .map_err(|e| TopologyError::Parse {
                        line: 0,
                        msg: format!("node {}: {e}", spec.name),
                    })?;
            let node = Node::new(
                &spec.name,
                addr,
                std::mem::take(&mut nic_infos[i]),
                capability,
                cfg.protocol.clone(),
                node_seed(seed, &spec.name),
            );
            by_addr.insert(addr, i);
            slots.push(Slot {
                node,
                online: true,
                epoch: 0,
                ports: std::mem::take(&mut ports[i]),
            });
        }

        let mut ipmap = BTreeMap::new();
        for (ip, name) in &topology.ipmap {
            let &n = index
                .get(name.as_str())
                .ok_or_else(|| TopologyError::DanglingAttachment {
                    line: 0,
                    what: "ipmap",
                    target: name.clone(),
                })?;
            ipmap.insert(*ip, n);
        }

        let mut net = Network {
            metrics: Metrics::new(slots.len()),
            cfg,
            topology: topology.clone(),
            slots,
            links,
            by_addr,
            ipmap,
            queue: BinaryHeap::new(),
            now: 0,
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            reports: Vec::new(),
            trace: Sha256::new(),
            hop_log: Vec::new(),
            frame_log: Vec::new(),
            next_session: 1,
            next_query: 1,
        };
        for i in 0..net.slots.len() {
            net.invoke(i, |n, ctx| n.start(ctx));
        }
        Ok(net)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> Micros {
        self.now
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.slots[i].node
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.slots.iter().map(|s| &s.node)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.node.name() == name)
    }

    pub fn index_of_addr(&self, addr: NodeAddr) -> Option<usize> {
        self.by_addr.get(&addr).copied()
    }

    pub fn name_of(&self, i: usize) -> &str {
        self.slots[i].node.name()
    }

    pub fn addr_of(&self, i: usize) -> NodeAddr {
        self.slots[i].node.addr()
    }

    pub fn require(&self, name: &str) -> Result<usize, SimError> {
        self.index_of(name)
            .ok_or_else(|| SimError::UnknownNode(name.to_string()))
    }

    /// MAC of `node`'s NIC `nic`.
    pub fn mac_of(&self, node: usize, nic: NicId) -> Option<MacAddr> {
        self.slots[node].ports.get(&nic).map(|(_, m)| *m)
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn mark_stage(&mut self, name: &str) {
        self.metrics.mark_stage(name, self.now);
    }

    pub fn hop_log(&self) -> &[HopRecord] {
        &self.hop_log
    }

    pub fn frame_log(&self) -> &[FrameRecord] {
        &self.frame_log
    }

    pub fn clear_hop_log(&mut self) {
        self.hop_log.clear();
    }

    /// Digest of every event executed so far.
    pub fn trace_digest(&self) -> [u8; 32] {
        self.trace.clone().finalize().into()
    }

    /// Reports emitted by nodes since `from`, as (node, event) pairs.
    pub fn reports_since(&self, from: usize) -> impl Iterator<Item = (usize, &NodeEvent)> {
        self.reports[from.min(self.reports.len())..]
            .iter()
            .map(|r| (r.node, &r.event))
    }

    pub fn report_count(&self) -> usize {
        self.reports.len()
    }

    pub fn is_online(&self, i: usize) -> bool {
        self.slots[i].online
    }

    /// Takes a host off or back on the network. Offline hosts drop every
    /// frame and lose their pending timers.
    pub fn set_online(&mut self, i: usize, online: bool) {
        let slot = &mut self.slots[i];
        if slot.online == online {
            return;
        }
        slot.online = online;
        if online {
            self.invoke(i, |n, ctx| n.resume(ctx));
        } else {
            slot.epoch += 1;
            slot.node.suspend();
        }
    }

    /// Runs `f` against node `i` with a fresh context and applies its outputs.
    pub fn invoke<T>(&mut self, i: usize, f: impl FnOnce(&mut Node, &mut Ctx) -> T) -> Option<T> {
        if !self.slots[i].online {
            return None;
        }
        let mut out = Vec::new();
        let r = {
            let mut ctx = Ctx::new(self.now, &mut out);
            f(&mut self.slots[i].node, &mut ctx)
        };
        self.apply(i, out);
        Some(r)
    }

    fn push(&mut self, at: Micros, action: Action) {
        self.seq += 1;
        self.queue.push(Event {
            at,
            seq: self.seq,
            action,
        });
    }

    fn apply(&mut self, i: usize, outputs: Vec<Output>) {
        for o in outputs {
            match o {
                Output::Frame {
                    nic,
                    dmac,
                    ethertype,
                    bytes,
                    delay,
                } => {
                    if self
                        .transmit(i, nic, dmac, ethertype, bytes, delay)
                        .is_err()
                    {
                        self.metrics.nodes[i].drops += 1;
                    }
                }
                Output::Timer { after, timer } => {
                    let epoch = self.slots[i].epoch;
                    self.push(
                        self.now + after,
                        Action::Timer {
                            node: i,
                            epoch,
                            timer,
                        },
                    );
                }
                Output::Event(event) => {
                    if matches!(event, NodeEvent::Dropped(_)) {
                        self.metrics.nodes[i].drops += 1;
                    }
                    self.reports.push(Report { node: i, event });
                }
            }
        }
    }

    /// Puts a frame on the link attached to `node`'s `nic`.
    ///
    /// A point-to-point link always delivers to the far end. A shared link
    /// delivers a broadcast to every other attachment and a unicast only to
    /// the attachment owning `dmac`.
    pub fn emit_frame(
        &mut self,
        node: usize,
        nic: NicId,
        dmac: MacAddr,
        ethertype: u16,
        bytes: Vec<u8>,
    ) -> Result<(), SimError> {
        self.transmit(node, nic, dmac, ethertype, bytes, 0)
    }

    fn transmit(
        &mut self,
        node: usize,
        nic: NicId,
        dmac: MacAddr,
        ethertype: u16,
        mut bytes: Vec<u8>,
        delay: Micros,
    ) -> Result<(), SimError> {
        let &(li, smac) =
            self.slots[node]
                .ports
                .get(&nic)
                .ok_or_else(|| SimError::UnattachedNic {
                    node: self.slots[node].node.name().to_string(),
                    nic: nic.get(),
                })?;
        if bytes.len() < MIN_FRAME_PAYLOAD {
            bytes.resize(MIN_FRAME_PAYLOAD, 0);
        }
        let class = classify_frame(ethertype, &bytes);
        let control = matches!(class, FrameClass::Control(_));
        let c = &mut self.metrics.nodes[node];
        match class {
            FrameClass::Control(t) => {
                c.ctrl_tx += 1;
                c.ctrl_bytes += bytes.len() as u64;
                c.by_type[t as usize] += 1;
                if self.cfg.frame_log {
                    self.frame_log.push(FrameRecord {
                        at: self.now,
                        node,
                        nic,
                        msg_type: t,
                    });
                }
            }
            FrameClass::Data => c.data_tx += 1,
            FrameClass::Other => {}
        }
        if self.cfg.hop_log {
            self.log_hop(node, HopDirection::Tx, ethertype, &bytes);
        }
        let link = &self.links[li];
        let at = self.now + delay + link.latency;
        let (loss, kind) = (link.loss, link.kind);
        let targets: Vec<(usize, NicId)> = link
            .ends
            .iter()
            .filter(|(n, i, mac)| {
                !(*n == node && *i == nic)
                    && (kind == LinkKind::PointToPoint || dmac.is_broadcast() || *mac == dmac)
            })
            .map(|(n, i, _)| (*n, *i))
            .collect();
        for (to, rx_nic) in targets {
            if control {
                self.metrics.ctrl_copies += 1;
            }
            if loss > 0.0 && self.rng.gen_bool(loss) {
                if control {
                    self.metrics.ctrl_lost += 1;
                }
                continue;
            }
            self.push(
                at,
                Action::Frame {
                    to,
                    nic: rx_nic,
                    smac,
                    ethertype,
                    bytes: bytes.clone(),
                    control,
                },
            );
        }
        Ok(())
    }

    fn log_hop(&mut self, node: usize, dir: HopDirection, ethertype: u16, bytes: &[u8]) {
        if ethertype != ETHERTYPE_PVH_DATA {
            return;
        }
        if let Ok(p) = PvhPacket::decode(bytes) {
            self.hop_log.push(HopRecord {
                at: self.now,
                node,
                dir,
                kind: p.header.kind,
                src: p.header.src,
                dst: p.header.dst,
            });
        }
    }

    /// Executes the next event. Returns false when the queue is empty.
    pub fn step(&mut self) -> bool {
        let Some(ev) = self.queue.pop() else {
            return false;
        };
        debug_assert!(ev.at >= self.now);
        self.now = ev.at;
        self.trace.update(ev.at.to_be_bytes());
        self.trace.update(ev.seq.to_be_bytes());
        match ev.action {
            Action::Frame {
                to,
                nic,
                smac,
                ethertype,
                bytes,
                control,
            } => {
                self.trace.update([0, nic.get()]);
                self.trace.update((to as u64).to_be_bytes());
                self.trace.update(&bytes);
                if !self.slots[to].online {
                    if control {
                        self.metrics.ctrl_discarded += 1;
                    }
                    return true;
                }
                if control {
                    self.metrics.nodes[to].ctrl_rx += 1;
                } else {
                    self.metrics.nodes[to].data_rx += 1;
                }
                if self.cfg.hop_log {
                    self.log_hop(to, HopDirection::Rx, ethertype, &bytes);
                }
                self.invoke(to, |n, ctx| n.on_frame(ctx, nic, smac, ethertype, &bytes));
            }
            Action::Timer { node, epoch, timer } => {
                self.trace.update([1]);
                self.trace.update((node as u64).to_be_bytes());
                if self.slots[node].epoch == epoch && self.slots[node].online {
                    self.invoke(node, |n, ctx| n.on_timer(ctx, timer));
                }
            }
        }
        true
    }

    /// Executes every event due at or before `t`, then sets the clock to `t`.
    pub fn run_until(&mut self, t: Micros) {
        while self.queue.peek().is_some_and(|e| e.at <= t) {
            self.step();
        }
        self.now = self.now.max(t);
    }

    pub fn run_for(&mut self, d: Micros) {
        self.run_until(self.now + d);
    }

    /// Control frame copies still queued for delivery.
    pub fn ctrl_in_flight(&self) -> u64 {
        self.queue
            .iter()
            .filter(|e| matches!(e.action, Action::Frame { control: true, .. }))
            .count() as u64
    }

    /// Copies sent = received + lost + discarded at offline hosts + in flight.
    pub fn ctrl_conserved(&self) -> bool {
        let m = &self.metrics;
        m.ctrl_copies == m.total_ctrl_rx() + m.ctrl_lost + m.ctrl_discarded + self.ctrl_in_flight()
    }

    /// Steps until `pick` accepts a report made after `cursor`, or the
    /// clock would pass `deadline`.
    fn wait_for<T>(
        &mut self,
        mut cursor: usize,
        deadline: Micros,
        mut pick: impl FnMut(usize, &NodeEvent) -> Option<T>,
    ) -> Option<T> {
        loop {
            while cursor < self.reports.len() {
                let r = &self.reports[cursor];
                cursor += 1;
                if let Some(v) = pick(r.node, &r.event) {
                    return Some(v);
                }
            }
            if self.queue.peek().is_none_or(|e| e.at > deadline) {
                self.now = self.now.max(deadline);
                return None;
            }
            self.step();
        }
    }

    fn all_assigned(&self) -> bool {
        self.slots
            .iter()
            .filter(|s| s.online)
            .all(|s| s.node.membership().is_assigned())
    }

    /// Runs until every online node belongs to a cluster, then long enough
    /// for one more round of hellos and uploads to reach the heads.
    pub fn converge(&mut self, limit: Micros) -> Result<Micros, SimError> {
        let p = &self.cfg.protocol;
        if !p.clustering {
            return Ok(self.now);
        }
        let settle = p.hello_interval + p.upload_jitter_max + 500_000;
        self.run_until(p.join_deadline());
        while !self.all_assigned() {
            if self.now >= limit {
                return Err(SimError::NotConverged(limit));
            }
            self.run_for(100_000);
        }
        self.run_for(settle);
        Ok(self.now)
    }

    fn op_deadline(&self) -> Micros {
        let p = &self.cfg.protocol;
        self.now + p.route_request_timeout + p.probe_timeout + p.query_timeout + 1_000_000
    }

    fn unreachable(&self, src: usize, dst: usize) -> SimError {
        SimError::Unreachable {
            src: self.name_of(src).to_string(),
            dst: self.name_of(dst).to_string(),
        }
    }

    /// Resolves a route at `src` towards `dst`.
    pub fn resolve_route(&mut self, src: usize, dst: usize) -> Result<PathVector, SimError> {
        let target = self.addr_of(dst);
        let cursor = self.reports.len();
        self.invoke(src, |n, ctx| n.resolve_route(ctx, target))
            .ok_or_else(|| self.unreachable(src, dst))?;
        let deadline = self.op_deadline();
        let r = self.wait_for(cursor, deadline, |node, ev| match ev {
            NodeEvent::RouteResolved { target: t, pv, .. } if node == src && *t == target => {
                Some(Ok(pv.clone()))
            }
            NodeEvent::RouteFailed { target: t } if node == src && *t == target => Some(Err(())),
            _ => None,
        });
        match r {
            Some(Ok(pv)) => Ok(pv),
            _ => Err(self.unreachable(src, dst)),
        }
    }

    /// Pings `dst` from `src` `count` times, one echo at a time.
    pub fn ping(
        &mut self,
        src: usize,
        dst: usize,
        count: u32,
    ) -> Result<Vec<PingSample>, SimError> {
        let session = self.next_session;
        self.next_session += 1;
        let target = self.addr_of(dst);
        let cursor = self.reports.len();
        self.invoke(src, |n, ctx| n.start_ping(ctx, session, target, count))
            .ok_or_else(|| self.unreachable(src, dst))?;
        let deadline = self.op_deadline() + Micros::from(count) * self.cfg.protocol.echo_timeout;
        let done = self.wait_for(cursor, deadline, |node, ev| match ev {
            NodeEvent::PingDone { session: s } if node == src && *s == session => Some(true),
            NodeEvent::PingFailed { session: s, .. } if node == src && *s == session => Some(false),
            _ => None,
        });
        let samples: Vec<PingSample> = self
            .reports_since(cursor)
            .filter_map(|(node, ev)| match ev {
                NodeEvent::EchoSample {
                    session: s,
                    seq,
                    hops,
                    rtt,
                    first,
                    ..
                } if node == src && *s == session => Some(PingSample {
                    src,
                    dst,
                    hops: *hops,
                    seq: *seq,
                    rtt_us: *rtt,
                    first: *first,
                }),
                _ => None,
            })
            .collect();
        self.metrics.pings.extend(samples.iter().cloned());
        match done {
            Some(true) => Ok(samples),
            _ => Err(self.unreachable(src, dst)),
        }
    }

    pub fn register_service(&mut self, node: usize, name: &str) -> Result<(), SimError> {
        match self.invoke(node, |n, ctx| n.register_service(ctx, name)) {
            Some(Ok(())) => Ok(()),
            Some(Err(e)) => Err(SimError::Service(e.to_string())),
            None => Err(SimError::Service(format!(
                "{} is offline",
                self.name_of(node)
            ))),
        }
    }

    /// Looks up `name` from `node`; a missing provider is not an error.
    pub fn query_service(&mut self, node: usize, name: &str) -> Result<ServiceAnswer, SimError> {
        let query = self.next_query;
        self.next_query += 1;
        let cursor = self.reports.len();
        self.invoke(node, |n, ctx| n.query_service(ctx, query, name))
            .ok_or_else(|| SimError::Service(format!("{} is offline", self.name_of(node))))?;
        let deadline = self.op_deadline() + self.cfg.protocol.probe_timeout;
        let r = self.wait_for(cursor, deadline, |n, ev| match ev {
            NodeEvent::ServiceResolved {
                query: q,
                provider,
                latency,
                ..
            } if n == node && *q == query => Some((*provider, *latency)),
            _ => None,
        });
        let (provider, latency) =
            r.ok_or_else(|| SimError::Service(format!("query for {name:?} never completed")))?;
        Ok(ServiceAnswer {
            provider: provider.and_then(|a| self.index_of_addr(a)),
            latency,
        })
    }

    /// Tunnels an IPv4 datagram from `src` to the node mapped to its
    /// destination address; returns what the destination decapsulated.
    pub fn send_ip(&mut self, src: usize, datagram: Vec<u8>) -> Result<Vec<u8>, SimError> {
        let ip = ipv4_destination(&datagram).map_err(|e| SimError::Tunnel(e.to_string()))?;
        let &dst = self.ipmap.get(&ip).ok_or(SimError::Unmapped(ip))?;
        let target = self.addr_of(dst);
        let origin = self.addr_of(src);
        let cursor = self.reports.len();
        self.invoke(src, |n, ctx| n.send_ip(ctx, target, datagram))
            .ok_or_else(|| self.unreachable(src, dst))?;
        let deadline = self.op_deadline();
        let r = self.wait_for(cursor, deadline, |node, ev| match ev {
            NodeEvent::IpDelivered { src: s, bytes } if node == dst && *s == origin => {
                Some(Some(bytes.clone()))
            }
            NodeEvent::RouteFailed { target: t } if node == src && *t == target => Some(None),
            _ => None,
        });
        r.flatten().ok_or_else(|| self.unreachable(src, dst))
    }

    pub fn ip_of(&self, node: usize) -> Option<Ipv4Addr> {
        self.ipmap
            .iter()
            .find(|(_, n)| **n == node)
            .map(|(ip, _)| *ip)
    }

    /// Current clusters, ordered by head address; members ordered likewise.
    pub fn clusters(&self) -> Vec<ClusterInfo> {
        let mut heads: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.slots[i].node.membership().role == Role::Head)
            .collect();
        heads.sort_by_key(|&i| self.addr_of(i));
        heads
            .into_iter()
            .map(|h| {
                let haddr = self.addr_of(h);
                let mut members: Vec<usize> = (0..self.slots.len())
                    .filter(|&i| {
                        let m = self.slots[i].node.membership();
                        m.role == Role::Member && m.head_addr == Some(haddr)
                    })
                    .collect();
                members.sort_by_key(|&i| self.addr_of(i));
                ClusterInfo {
                    head: h,
                    capability: self.slots[h].node.capability(),
                    members: members
                        .into_iter()
                        .map(|i| {
                            let m = self.slots[i].node.membership();
                            MemberInfo {
                                node: i,
                                join_round: m.join_round,
                                distance: m.distance_to_head().unwrap_or(0),
                            }
                        })
                        .collect(),
                }
            })
            .collect()
    }

    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| !self.slots[i].node.membership().is_assigned())
            .collect()
    }

    /// Human-readable cluster listing with stable ordering.
    pub fn cluster_report(&self) -> String {
        let mut s = String::new();
        let clusters = self.clusters();
        let _ = writeln!(s, "clusters: {}", clusters.len());
        for c in &clusters {
            let _ = writeln!(
                s,
                "cluster head={} addr={} capability={:.4} members={}",
                self.name_of(c.head),
                self.addr_of(c.head),
                c.capability,
                c.members.len()
            );
            for m in &c.members {
                let _ = writeln!(
                    s,
                    "  member {} addr={} join_round={} distance={}",
                    self.name_of(m.node),
                    self.addr_of(m.node),
                    m.join_round,
                    m.distance
                );
            }
        }
        for u in self.unassigned() {
            let _ = writeln!(s, "unassigned {} addr={}", self.name_of(u), self.addr_of(u));
        }
        s
    }
}
