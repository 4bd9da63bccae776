//! A PVH host as a sans-IO state machine.
//!
//! The simulator feeds frames and timer expiries in through a [`Ctx`] and
//! collects the frames, timers and reports the node produces.

mod ping;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{ClusterMembership, NeighborTable, ServiceRegistry};
use crate::config::ProtocolConfig;
use crate::forwarding::{forward_step, record_packet_hop, DropReason, ForwardAction, LinkKind};
use crate::routing::{ProbeDedup, RouteCache, TopologyGraph};
use crate::sim::Micros;
use crate::tunnel::{decap_ip, encap_ip};
use crate::wire::{
    decode_control, encode_control, ControlMessage, MacAddr, NicId, NodeAddr, PacketKind,
    PathVector, PvhHeader, PvhPacket, ETHERTYPE_PVH_CONTROL, ETHERTYPE_PVH_DATA,
};

pub(crate) use ping::PingSession;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NicInfo {
    pub id: NicId,
    pub mac: MacAddr,
    pub link: LinkKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Timer {
    Election,
    JoinDeadline,
    ScanStart(u32),
    ScanDecide(u32),
    Hello,
    Upload,
    HeadKeepalive,
    ServiceKeepalive,
    LocalRoute(NodeAddr),
    RouteRequestTimeout { target: NodeAddr, request_id: u32 },
    ProbeTimeout { target: NodeAddr, request_id: u32 },
    LocalQuery(u32),
    QueryTimeout(u32),
    ServiceProbeTimeout(u32),
    EchoTimeout { session: u32, seq: u32 },
    Deliver(Box<PvhPacket>),
}

/// How a route was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteSource {
    Local,
    Cache,
    Head,
    Probe,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeEvent {
    RouteResolved {
        target: NodeAddr,
        pv: PathVector,
        source: RouteSource,
    },
    RouteFailed {
        target: NodeAddr,
    },
    EchoSample {
        session: u32,
        target: NodeAddr,
        seq: u32,
        hops: usize,
        rtt: Micros,
        first: bool,
    },
    PingFailed {
        session: u32,
        target: NodeAddr,
        seq: u32,
    },
    PingDone {
        session: u32,
    },
    /// An echo request was answered along `route`, the reversed recorded path.
    EchoAnswered {
        from: NodeAddr,
        route: PathVector,
    },
    ServiceResolved {
        query: u32,
        name: String,
        provider: Option<NodeAddr>,
        latency: Micros,
    },
    IpDelivered {
        src: NodeAddr,
        bytes: Vec<u8>,
    },
    Joined {
        head: NodeAddr,
        round: u32,
    },
    Elected,
    Offline(Vec<NodeAddr>),
    Dropped(DropReason),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Frame {
        nic: NicId,
        dmac: MacAddr,
        ethertype: u16,
        bytes: Vec<u8>,
        delay: Micros,
    },
    Timer {
        after: Micros,
        timer: Timer,
    },
    Event(NodeEvent),
}

/// Collects a node's outputs for one step.
pub struct Ctx<'a> {
    now: Micros,
    out: &'a mut Vec<Output>,
}

impl<'a> Ctx<'a> {
    pub fn new(now: Micros, out: &'a mut Vec<Output>) -> Self {
        Ctx { now, out }
    }

    pub fn now(&self) -> Micros {
        self.now
    }

    pub fn frame(
        &mut self,
        nic: NicId,
        dmac: MacAddr,
        ethertype: u16,
        bytes: Vec<u8>,
        delay: Micros,
    ) {
        self.out.push(Output::Frame {
            nic,
            dmac,
            ethertype,
            bytes,
            delay,
        });
    }

    pub fn timer(&mut self, after: Micros, timer: Timer) {
        self.out.push(Output::Timer { after, timer });
    }

    pub fn report(&mut self, event: NodeEvent) {
        self.out.push(Output::Event(event));
    }
}

/// Something waiting for a route to resolve.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Waiter {
    Report,
    Ping(u32),
    Ip(Vec<u8>),
}

#[derive(Clone, Debug)]
pub(crate) struct PendingRoute {
    pub request_id: u32,
    pub waiters: Vec<Waiter>,
}

/// Who asked for a service lookup this node is resolving.
#[derive(Clone, Debug)]
pub(crate) enum QueryOrigin {
    Local {
        query: u32,
        started: Micros,
    },
    Remote {
        origin: NodeAddr,
        request_id: u32,
        reply_pv: PathVector,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct PendingQuery {
    pub query: u32,
    pub name: String,
    pub started: Micros,
}

#[derive(Clone, Debug)]
pub(crate) struct ScanCandidate {
    pub head: NodeAddr,
    pub capability: f64,
    pub pv: PathVector,
    pub responder: NodeAddr,
}

pub struct Node {
    pub(crate) addr: NodeAddr,
    pub(crate) name: String,
    pub(crate) nics: Vec<NicInfo>,
    pub(crate) nic_ids: Vec<NicId>,
    pub(crate) capability: f64,
    pub(crate) cfg: ProtocolConfig,
    pub(crate) rng: ChaCha8Rng,
    next_request_id: u32,

    pub(crate) membership: ClusterMembership,
    pub(crate) known_caps: BTreeMap<NodeAddr, f64>,
    /// Largest hop budget seen per flooded capability origin.
    pub(crate) cap_budget: BTreeMap<NodeAddr, u8>,
    /// Largest hop budget seen per (head, sequence) declaration.
    pub(crate) decl_budget: BTreeMap<(NodeAddr, u32), u8>,
    pub(crate) head_candidates: BTreeMap<NodeAddr, (f64, PathVector)>,
    pub(crate) deadline_passed: bool,
    pub(crate) decl_seq: u32,
    pub(crate) scan_round: u32,
    pub(crate) scan_request: Option<u32>,
    pub(crate) scan_replies: Vec<ScanCandidate>,
    pub(crate) neighbors: NeighborTable,
    pub(crate) topology: TopologyGraph,
    pub(crate) offline: BTreeSet<NodeAddr>,
    pub(crate) registry: ServiceRegistry,

    pub(crate) routes: RouteCache,
    pub(crate) dedup: ProbeDedup,
    pub(crate) pending_routes: BTreeMap<NodeAddr, PendingRoute>,
    pub(crate) bfs_runs: u64,

    pub(crate) local_services: BTreeSet<String>,
    pub(crate) pushed: BTreeMap<String, NodeAddr>,
    pub(crate) keepalive_armed: bool,
    pub(crate) pending_queries: BTreeMap<u32, PendingQuery>,
    pub(crate) local_queries: BTreeMap<u32, (String, Micros)>,
    pub(crate) service_probes: BTreeMap<u32, (String, QueryOrigin)>,

    pub(crate) pings: BTreeMap<u32, PingSession>,
}

impl Node {
    pub fn new(
        name: &str,
        addr: NodeAddr,
        nics: Vec<NicInfo>,
        capability: f64,
        cfg: ProtocolConfig,
        seed: u64,
    ) -> Node {
        let mut nics = nics;
        nics.sort_by_key(|n| n.id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next_request_id = rng.gen();
        Node {
            addr,
            name: name.to_string(),
            nic_ids: nics.iter().map(|n| n.id).collect(),
            nics,
            capability,
            routes: RouteCache::new(cfg.route_ttl),
            dedup: ProbeDedup::new(cfg.dedup_ttl),
            cfg,
            rng,
            next_request_id,
            membership: ClusterMembership::default(),
            known_caps: BTreeMap::new(),
            cap_budget: BTreeMap::new(),
            decl_budget: BTreeMap::new(),
            head_candidates: BTreeMap::new(),
            deadline_passed: false,
            decl_seq: 0,
            scan_round: 0,
            scan_request: None,
            scan_replies: Vec::new(),
            neighbors: NeighborTable::new(),
            topology: TopologyGraph::new(),
            offline: BTreeSet::new(),
            registry: ServiceRegistry::new(),
            pending_routes: BTreeMap::new(),
            bfs_runs: 0,
            local_services: BTreeSet::new(),
            pushed: BTreeMap::new(),
            keepalive_armed: false,
            pending_queries: BTreeMap::new(),
            local_queries: BTreeMap::new(),
            service_probes: BTreeMap::new(),
            pings: BTreeMap::new(),
        }
    }

    pub fn addr(&self) -> NodeAddr {
        self.addr
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nics(&self) -> &[NicInfo] {
        &self.nics
    }

    pub fn capability(&self) -> f64 {
        self.capability
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn membership(&self) -> &ClusterMembership {
        &self.membership
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.neighbors
    }

    pub fn topology(&self) -> &TopologyGraph {
        &self.topology
    }

    pub fn known_capabilities(&self) -> &BTreeMap<NodeAddr, f64> {
        &self.known_caps
    }

    pub fn registry(&self) -> &ServiceRegistry {
        &self.registry
    }

    pub fn route_cache(&self) -> &RouteCache {
        &self.routes
    }

    pub fn pushed_services(&self) -> &BTreeMap<String, NodeAddr> {
        &self.pushed
    }

    /// Times this node ran a shortest-path search.
    pub fn bfs_runs(&self) -> u64 {
        self.bfs_runs
    }

    pub(crate) fn next_request_id(&mut self) -> u32 {
        let id = self.next_request_id;
        self.next_request_id = self.next_request_id.wrapping_add(1);
        id
    }

    pub(crate) fn link_kind(&self, nic: NicId) -> LinkKind {
        self.nics
            .iter()
            .find(|n| n.id == nic)
            .map_or(LinkKind::PointToPoint, |n| n.link)
    }

    /// Boot: starts cluster initialization and hellos.
    pub fn start(&mut self, ctx: &mut Ctx) {
        if self.cfg.clustering {
            self.start_cluster_init(ctx);
            let phase = self.rng.gen_range(0..self.cfg.hello_interval.max(1));
            ctx.timer(phase, Timer::Hello);
        }
    }

    /// Drops volatile state when the host goes dark. Timers are discarded by
    /// the caller.
    pub fn suspend(&mut self) {
        self.pending_routes.clear();
        self.pending_queries.clear();
        self.local_queries.clear();
        self.service_probes.clear();
        self.pings.clear();
        self.neighbors.clear();
        self.keepalive_armed = false;
    }

    /// Restarts periodic work after [`Node::suspend`].
    pub fn resume(&mut self, ctx: &mut Ctx) {
        if self.cfg.clustering {
            ctx.timer(0, Timer::Hello);
            if !self.membership.is_assigned() {
                self.deadline_passed = true;
                ctx.timer(0, Timer::ScanStart(self.scan_round + 1));
            }
            if self.membership.role == crate::clustering::Role::Head {
                ctx.timer(self.cfg.head_keepalive, Timer::HeadKeepalive);
            }
        }
        if !self.local_services.is_empty() {
            self.arm_service_keepalive(ctx);
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::Election => self.elect_head(ctx),
            Timer::JoinDeadline => self.on_join_deadline(ctx),
            Timer::ScanStart(r) => self.cluster_scan(ctx, r),
            Timer::ScanDecide(r) => self.on_scan_decide(ctx, r),
            Timer::Hello => self.on_hello_timer(ctx),
            Timer::Upload => self.upload_neighbor_table(ctx),
            Timer::HeadKeepalive => self.on_head_keepalive(ctx),
            Timer::ServiceKeepalive => self.on_service_keepalive(ctx),
            Timer::LocalRoute(target) => self.on_local_route(ctx, target),
            Timer::RouteRequestTimeout { target, request_id } => {
                self.on_route_request_timeout(ctx, target, request_id)
            }
            Timer::ProbeTimeout { target, request_id } => {
                self.on_probe_timeout(ctx, target, request_id)
            }
            Timer::LocalQuery(q) => self.on_local_query(ctx, q),
            Timer::QueryTimeout(rid) => self.on_query_timeout(ctx, rid),
            Timer::ServiceProbeTimeout(rid) => self.on_service_probe_timeout(ctx, rid),
            Timer::EchoTimeout { session, seq } => self.on_echo_timeout(ctx, session, seq),
            Timer::Deliver(packet) => self.on_deliver(ctx, *packet),
        }
    }

    /// A frame arrived on `rx_nic` from the NIC with MAC `smac`.
    pub fn on_frame(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        ethertype: u16,
        bytes: &[u8],
    ) {
        match ethertype {
            ETHERTYPE_PVH_CONTROL => {
                if let Ok(msg) = decode_control(bytes) {
                    self.on_flooded_control(ctx, rx_nic, smac, msg);
                }
            }
            ETHERTYPE_PVH_DATA => {
                let Ok(mut packet) = PvhPacket::decode(bytes) else {
                    ctx.report(NodeEvent::Dropped(DropReason::MalformedPathVector));
                    return;
                };
                if let Err(reason) =
                    record_packet_hop(&mut packet, rx_nic, smac, self.link_kind(rx_nic))
                {
                    ctx.report(NodeEvent::Dropped(reason));
                    return;
                }
                self.forward(ctx, packet);
            }
            _ => {}
        }
    }

    /// One forwarding step; delivery and emission each cost one processing delay.
    pub(crate) fn forward(&mut self, ctx: &mut Ctx, packet: PvhPacket) {
        match forward_step(packet, self.addr, &self.nic_ids) {
            ForwardAction::Deliver(packet) => {
                ctx.timer(self.cfg.processing, Timer::Deliver(Box::new(packet)))
            }
            ForwardAction::Emit { nic, dmac, packet } => match packet.encode() {
                Ok(bytes) => ctx.frame(nic, dmac, ETHERTYPE_PVH_DATA, bytes, self.cfg.processing),
                Err(_) => ctx.report(NodeEvent::Dropped(DropReason::MalformedPathVector)),
            },
            ForwardAction::Drop(reason) => ctx.report(NodeEvent::Dropped(reason)),
        }
    }

    fn on_deliver(&mut self, ctx: &mut Ctx, packet: PvhPacket) {
        match packet.header.kind {
            PacketKind::Raw => {
                if let Ok(msg) = decode_control(&packet.payload) {
                    self.on_unicast_control(ctx, &packet.header, msg);
                }
            }
            PacketKind::EchoRequest => self.on_echo_request(ctx, packet),
            PacketKind::EchoReply => self.on_echo_reply(ctx, packet),
            PacketKind::IpOverPvh => {
                if let Ok(ip) = decap_ip(&packet) {
                    let bytes = ip.to_vec();
                    ctx.report(NodeEvent::IpDelivered {
                        src: packet.header.src,
                        bytes,
                    });
                }
            }
        }
    }

    /// Sends a control message as a raw PVH packet along `pv`.
    pub(crate) fn send_unicast(
        &mut self,
        ctx: &mut Ctx,
        dst: NodeAddr,
        pv: PathVector,
        msg: &ControlMessage,
        with_rev_path: bool,
    ) {
        let Ok(payload) = encode_control(msg) else {
            return;
        };
        let mut header = PvhHeader::new(PacketKind::Raw, self.addr, dst, pv);
        if with_rev_path {
            header = header.with_rev_path();
        }
        self.forward(ctx, PvhPacket::new(header, payload));
    }

    /// Broadcasts a control frame on every NIC except `except`.
    pub(crate) fn flood(&mut self, ctx: &mut Ctx, msg: &ControlMessage, except: Option<NicId>) {
        let Ok(bytes) = encode_control(msg) else {
            return;
        };
        for nic in self.nic_ids.clone() {
            if Some(nic) != except {
                ctx.frame(
                    nic,
                    MacAddr::BROADCAST,
                    ETHERTYPE_PVH_CONTROL,
                    bytes.clone(),
                    self.cfg.processing,
                );
            }
        }
    }

    fn on_flooded_control(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        msg: ControlMessage,
    ) {
        match msg {
            ControlMessage::CapBcast {
                origin,
                capability,
                hops_remaining,
            } => self.on_capability_broadcast(ctx, rx_nic, origin, capability, hops_remaining),
            ControlMessage::HeadDecl {
                head,
                capability,
                hops_remaining,
                seq,
                rev_path,
            } => self.on_head_declaration(
                ctx,
                rx_nic,
                smac,
                head,
                capability,
                hops_remaining,
                seq,
                rev_path,
            ),
            ControlMessage::ScanReq {
                origin,
                request_id,
                hops_remaining,
                rev_path,
            } => self.on_scan_request(
                ctx,
                rx_nic,
                smac,
                origin,
                request_id,
                hops_remaining,
                rev_path,
            ),
            ControlMessage::Hello { origin } => self.on_hello(ctx, rx_nic, smac, origin),
            msg @ ControlMessage::ProbeReq { .. } => self.on_probe(ctx, rx_nic, smac, msg),
            ControlMessage::SvcPush {
                provider,
                name,
                request_id,
                hops_remaining,
            } => self.on_service_push(ctx, rx_nic, provider, name, request_id, hops_remaining),
            ControlMessage::SvcQuery {
                origin,
                request_id,
                name,
                hops_remaining,
                rev_path,
            } => self.on_flooded_query(
                ctx,
                rx_nic,
                smac,
                origin,
                request_id,
                name,
                hops_remaining,
                rev_path,
            ),
            _ => {}
        }
    }

    fn on_unicast_control(&mut self, ctx: &mut Ctx, header: &PvhHeader, msg: ControlMessage) {
        match msg {
            ControlMessage::JoinReq { member, head } => {
                self.on_join_request(ctx, header, member, head)
            }
            ControlMessage::JoinAck { .. } => {}
            ControlMessage::ScanRep {
                responder,
                request_id,
                head,
                head_capability,
                pv_to_head,
                ..
            } => self.on_scan_reply(
                header,
                responder,
                request_id,
                head,
                head_capability,
                pv_to_head,
            ),
            ControlMessage::NbrUpload { origin, neighbors } => {
                self.on_neighbor_upload(ctx, origin, &neighbors)
            }
            ControlMessage::RouteReq {
                origin,
                target,
                request_id,
            } => self.on_route_request(ctx, header, origin, target, request_id),
            ControlMessage::RouteRep {
                target,
                request_id,
                route,
            } => self.on_route_reply(ctx, target, request_id, route),
            ControlMessage::ProbeRep {
                request_id,
                responder,
                service,
                provider,
                ..
            } => self.on_probe_reply(ctx, header, request_id, responder, service, provider),
            ControlMessage::SvcReg { provider, name } => {
                self.on_service_register(ctx, provider, &name)
            }
            ControlMessage::SvcQuery {
                origin,
                request_id,
                name,
                ..
            } => self.on_head_query(ctx, header, origin, request_id, name),
            ControlMessage::SvcRep {
                request_id,
                name,
                provider,
            } => self.on_service_reply(ctx, request_id, name, provider),
            _ => {}
        }
    }

    /// Sends an IPv4 datagram to `dst` once a route is known.
    pub fn send_ip(&mut self, ctx: &mut Ctx, dst: NodeAddr, ip_packet: Vec<u8>) {
        self.request_route(ctx, dst, Waiter::Ip(ip_packet));
    }

    pub(crate) fn send_ip_along(
        &mut self,
        ctx: &mut Ctx,
        dst: NodeAddr,
        pv: PathVector,
        ip_packet: &[u8],
    ) {
        match encap_ip(ip_packet, self.addr, dst, pv) {
            Ok(packet) => self.forward(ctx, packet),
            Err(_) => ctx.report(NodeEvent::Dropped(DropReason::MalformedPathVector)),
        }
    }

    /// Hands a resolved route to whoever was waiting for it.
    pub(crate) fn route_ready(
        &mut self,
        ctx: &mut Ctx,
        target: NodeAddr,
        pv: PathVector,
        source: RouteSource,
        waiters: Vec<Waiter>,
    ) {
        for w in waiters {
            match w {
                Waiter::Report => ctx.report(NodeEvent::RouteResolved {
                    target,
                    pv: pv.clone(),
                    source,
                }),
                Waiter::Ping(session) => self.ping_route_ready(ctx, session, pv.clone()),
                Waiter::Ip(bytes) => self.send_ip_along(ctx, target, pv.clone(), &bytes),
            }
        }
    }

    pub(crate) fn route_failed(&mut self, ctx: &mut Ctx, target: NodeAddr, waiters: Vec<Waiter>) {
        for w in waiters {
            match w {
                Waiter::Report | Waiter::Ip(_) => ctx.report(NodeEvent::RouteFailed { target }),
                Waiter::Ping(session) => self.ping_unreachable(ctx, session),
            }
        }
    }
}
