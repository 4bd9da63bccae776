use rand::Rng;

use super::{is_local_maximum, Rank, Role};
use crate::forwarding::{record_reverse_hop, reverse_to_pv};
use crate::node::{Ctx, Node, NodeEvent, ScanCandidate, Timer};
use crate::wire::{
    ControlMessage, MacAddr, NeighborRecord, NicId, NodeAddr, PathVector, PvhHeader, RevPath,
};

impl Node {
    /// Floods this node's capability `x` hops and arms the election.
    pub fn start_cluster_init(&mut self, ctx: &mut Ctx) {
        self.known_caps.insert(self.addr, self.capability);
        if self.cfg.x > 0 {
            let msg = ControlMessage::CapBcast {
                origin: self.addr,
                capability: self.capability,
                hops_remaining: self.cfg.x,
            };
            self.flood(ctx, &msg, None);
        }
        ctx.timer(self.cfg.broadcast_phase, Timer::Election);
    }

    /// Stores the advertised capability and relays it while budget remains.
    ///
    /// A copy is relayed again only when it arrives with a larger remaining
    /// budget than any earlier copy, so every node within `x` hops hears it
    /// even when the first copy took a longer path.
    pub(crate) fn on_capability_broadcast(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        origin: NodeAddr,
        capability: f64,
        hops_remaining: u8,
    ) {
        if origin == self.addr {
            return;
        }
        self.known_caps.insert(origin, capability);
        let best = self.cap_budget.get(&origin).copied().unwrap_or(0);
        if hops_remaining <= best {
            return;
        }
        self.cap_budget.insert(origin, hops_remaining);
        if hops_remaining > 1 {
            let msg = ControlMessage::CapBcast {
                origin,
                capability,
                hops_remaining: hops_remaining - 1,
            };
            self.flood(ctx, &msg, Some(rx_nic));
        }
    }

    /// Becomes head when no known capability outranks this node's own.
    pub(crate) fn elect_head(&mut self, ctx: &mut Ctx) {
        if self.membership.is_assigned() {
            return;
        }
        let own = Rank::new(self.capability, self.addr);
        let known = self.known_caps.iter().map(|(a, n)| Rank::new(*n, *a));
        if is_local_maximum(own, known) {
            self.membership.become_head(self.addr, self.capability);
            ctx.report(NodeEvent::Elected);
            self.declare_head(ctx);
            ctx.timer(self.cfg.head_keepalive, Timer::HeadKeepalive);
        } else {
            ctx.timer(self.cfg.join_delay, Timer::JoinDeadline);
        }
    }

    fn declare_head(&mut self, ctx: &mut Ctx) {
        if self.cfg.x == 0 {
            return;
        }
        let msg = ControlMessage::HeadDecl {
            head: self.addr,
            capability: self.capability,
            hops_remaining: self.cfg.x,
            seq: self.decl_seq,
            rev_path: RevPath::new(),
        };
        self.flood(ctx, &msg, None);
    }

    pub(crate) fn on_head_keepalive(&mut self, ctx: &mut Ctx) {
        if self.membership.role != Role::Head {
            return;
        }
        self.decl_seq = self.decl_seq.wrapping_add(1);
        self.declare_head(ctx);
        ctx.timer(self.cfg.head_keepalive, Timer::HeadKeepalive);
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn on_head_declaration(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        head: NodeAddr,
        capability: f64,
        hops_remaining: u8,
        seq: u32,
        rev_path: RevPath,
    ) {
        if head == self.addr {
            return;
        }
        let Ok(rev) = record_reverse_hop(rev_path, rx_nic, smac, self.link_kind(rx_nic)) else {
            return;
        };
        let best = self.decl_budget.get(&(head, seq)).copied().unwrap_or(0);
        if hops_remaining <= best {
            return;
        }
        self.decl_budget.insert((head, seq), hops_remaining);
        if hops_remaining > 1 {
            let msg = ControlMessage::HeadDecl {
                head,
                capability,
                hops_remaining: hops_remaining - 1,
                seq,
                rev_path: rev.clone(),
            };
            self.flood(ctx, &msg, Some(rx_nic));
        }

        let pv = reverse_to_pv(&rev);
        match self.membership.role {
            Role::Unassigned => {
                let shorter = self
                    .head_candidates
                    .get(&head)
                    .is_none_or(|(_, old)| pv.hop_count() < old.hop_count());
                if shorter {
                    self.head_candidates.insert(head, (capability, pv));
                }
                if self.deadline_passed {
                    self.join_best_candidate(ctx);
                }
            }
            Role::Member if self.membership.head_addr == Some(head) => {
                let no_longer = self
                    .membership
                    .distance_to_head()
                    .is_none_or(|d| pv.hop_count() <= d);
                if no_longer {
                    self.membership.pv_to_head = Some(pv);
                }
            }
            _ => {}
        }
    }

    pub(crate) fn on_join_deadline(&mut self, ctx: &mut Ctx) {
        self.deadline_passed = true;
        if self.membership.is_assigned() {
            return;
        }
        if !self.join_best_candidate(ctx) {
            ctx.timer(self.cfg.scan_period, Timer::ScanStart(1));
        }
    }

    /// Joins the declared head with the highest rank.
    fn join_best_candidate(&mut self, ctx: &mut Ctx) -> bool {
        let best = self
            .head_candidates
            .iter()
            .max_by_key(|(h, (n, _))| Rank::new(*n, **h))
            .map(|(h, (n, pv))| (*h, *n, pv.clone()));
        let Some((head, capability, pv)) = best else {
            return false;
        };
        self.join(ctx, head, capability, pv, 0);
        true
    }

    fn join(&mut self, ctx: &mut Ctx, head: NodeAddr, capability: f64, pv: PathVector, round: u32) {
        self.membership.join(head, capability, pv.clone(), round);
        self.head_candidates.clear();
        self.scan_request = None;
        self.scan_replies.clear();
        ctx.report(NodeEvent::Joined { head, round });
        let msg = ControlMessage::JoinReq {
            member: self.addr,
            head,
        };
        self.send_unicast(ctx, head, pv, &msg, true);
    }

    pub(crate) fn on_join_request(
        &mut self,
        ctx: &mut Ctx,
        header: &PvhHeader,
        member: NodeAddr,
        head: NodeAddr,
    ) {
        if head != self.addr || self.membership.role != Role::Head {
            return;
        }
        self.membership.members.insert(member);
        if let Some(rev) = header.rev_path.as_ref() {
            let msg = ControlMessage::JoinAck { head, member };
            self.send_unicast(ctx, member, reverse_to_pv(rev), &msg, false);
        }
    }

    /// Starts scan round `round` if this node is still unassigned.
    pub fn cluster_scan(&mut self, ctx: &mut Ctx, round: u32) {
        if self.membership.is_assigned() {
            return;
        }
        let request_id = self.next_request_id();
        self.dedup.insert(self.addr, request_id, ctx.now());
        self.scan_round = round;
        self.scan_request = Some(request_id);
        self.scan_replies.clear();
        let msg = ControlMessage::ScanReq {
            origin: self.addr,
            request_id,
            hops_remaining: self.cfg.scan_hops.max(1),
            rev_path: RevPath::new(),
        };
        self.flood(ctx, &msg, None);
        ctx.timer(self.cfg.scan_wait, Timer::ScanDecide(round));
        ctx.timer(self.cfg.scan_period, Timer::ScanStart(round + 1));
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn on_scan_request(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        origin: NodeAddr,
        request_id: u32,
        hops_remaining: u8,
        rev_path: RevPath,
    ) {
        if origin == self.addr || !self.dedup.insert(origin, request_id, ctx.now()) {
            return;
        }
        let Ok(rev) = record_reverse_hop(rev_path, rx_nic, smac, self.link_kind(rx_nic)) else {
            return;
        };
        if self.membership.is_assigned() {
            let (Some(head), Some(head_capability), Some(pv_to_head)) = (
                self.membership.head_addr,
                self.membership.head_capability,
                self.membership.pv_to_head.clone(),
            ) else {
                return;
            };
            let msg = ControlMessage::ScanRep {
                responder: self.addr,
                request_id,
                head,
                head_capability,
                distance: pv_to_head.hop_count().min(u8::MAX as usize) as u8,
                pv_to_head,
            };
            self.send_unicast(ctx, origin, reverse_to_pv(&rev), &msg, true);
        } else if hops_remaining > 1 {
            let msg = ControlMessage::ScanReq {
                origin,
                request_id,
                hops_remaining: hops_remaining - 1,
                rev_path: rev,
            };
            self.flood(ctx, &msg, Some(rx_nic));
        }
    }

    pub(crate) fn on_scan_reply(
        &mut self,
        header: &PvhHeader,
        responder: NodeAddr,
        request_id: u32,
        head: NodeAddr,
        head_capability: f64,
        pv_to_head: PathVector,
    ) {
        if self.membership.is_assigned() || self.scan_request != Some(request_id) {
            return;
        }
        let Some(rev) = header.rev_path.as_ref() else {
            return;
        };
        let Ok(pv) = reverse_to_pv(rev).concat(&pv_to_head) else {
            return;
        };
        self.scan_replies.push(ScanCandidate {
            head,
            capability: head_capability,
            pv,
            responder,
        });
    }

    /// Joins the best cluster heard in this round: highest head rank, then
    /// shortest route, then smallest responder address.
    pub(crate) fn on_scan_decide(&mut self, ctx: &mut Ctx, round: u32) {
        if self.membership.is_assigned() || round != self.scan_round {
            return;
        }
        let best = self
            .scan_replies
            .iter()
            .max_by(|a, b| {
                Rank::new(a.capability, a.head)
                    .cmp(&Rank::new(b.capability, b.head))
                    .then(b.pv.hop_count().cmp(&a.pv.hop_count()))
                    .then(b.responder.cmp(&a.responder))
            })
            .cloned();
        if let Some(c) = best {
            self.join(ctx, c.head, c.capability, c.pv, round);
        }
    }

    pub(crate) fn on_hello_timer(&mut self, ctx: &mut Ctx) {
        let now = ctx.now();
        let msg = ControlMessage::Hello { origin: self.addr };
        self.flood(ctx, &msg, None);
        self.neighbors.expire(now, self.cfg.neighbor_expiry());
        if self.membership.is_assigned() {
            let lo = self.cfg.upload_jitter_min;
            let hi = self.cfg.upload_jitter_max.max(lo);
            let jitter = self.rng.gen_range(lo..=hi);
            ctx.timer(jitter, Timer::Upload);
        }
        if self.membership.role == Role::Head {
            self.sweep_offline(ctx);
        }
        self.routes.purge(now);
        self.dedup.purge(now);
        ctx.timer(self.cfg.hello_interval, Timer::Hello);
    }

    pub(crate) fn on_hello(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        origin: NodeAddr,
    ) {
        if origin == self.addr {
            return;
        }
        let dmac = match self.link_kind(rx_nic) {
            crate::forwarding::LinkKind::Shared => Some(smac),
            crate::forwarding::LinkKind::PointToPoint => None,
        };
        self.neighbors.upsert(origin, rx_nic, dmac, ctx.now());
    }

    /// Sends the current neighbor table to the head, or merges it locally
    /// on the head itself.
    pub fn upload_neighbor_table(&mut self, ctx: &mut Ctx) {
        let records = self.neighbors.records();
        match self.membership.role {
            Role::Head => self.topology.merge_upload(self.addr, &records, ctx.now()),
            Role::Member => {
                let (Some(head), Some(pv)) = (
                    self.membership.head_addr,
                    self.membership.pv_to_head.clone(),
                ) else {
                    return;
                };
                let msg = ControlMessage::NbrUpload {
                    origin: self.addr,
                    neighbors: records,
                };
                self.send_unicast(ctx, head, pv, &msg, false);
            }
            Role::Unassigned => {}
        }
    }

    pub(crate) fn on_neighbor_upload(
        &mut self,
        ctx: &mut Ctx,
        origin: NodeAddr,
        neighbors: &[NeighborRecord],
    ) {
        if self.membership.role != Role::Head {
            return;
        }
        self.topology.merge_upload(origin, neighbors, ctx.now());
        self.offline.remove(&origin);
    }

    /// Marks members silent for the offline window as expired; reports the
    /// newly offline ones.
    pub fn sweep_offline(&mut self, ctx: &mut Ctx) -> Vec<NodeAddr> {
        let offline = self
            .topology
            .sweep_offline(ctx.now(), self.cfg.offline_window(), self.addr);
        let fresh: Vec<NodeAddr> = offline.difference(&self.offline).copied().collect();
        self.offline = offline;
        if !fresh.is_empty() {
            ctx.report(NodeEvent::Offline(fresh.clone()));
        }
        fresh
    }
}
