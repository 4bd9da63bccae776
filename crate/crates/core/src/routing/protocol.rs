use super::{bfs_route, path_to_pv};
use crate::clustering::Role;
use crate::forwarding::{record_reverse_hop, reverse_to_pv};
use crate::node::{Ctx, Node, PendingRoute, RouteSource, Timer, Waiter};
use crate::wire::{ControlMessage, MacAddr, NicId, NodeAddr, PathVector, PvhHeader, RevPath};

impl Node {
    /// Resolves a route to `dst` and reports it as a
    /// [`NodeEvent::RouteResolved`](crate::node::NodeEvent::RouteResolved) or
    /// `RouteFailed`. Returns the route right away on a cache hit.
    pub fn resolve_route(&mut self, ctx: &mut Ctx, dst: NodeAddr) -> Option<PathVector> {
        self.request_route(ctx, dst, Waiter::Report)
    }

    pub(crate) fn request_route(
        &mut self,
        ctx: &mut Ctx,
        dst: NodeAddr,
        waiter: Waiter,
    ) -> Option<PathVector> {
        if dst == self.addr {
            let pv = PathVector::terminator();
            self.route_ready(ctx, dst, pv.clone(), RouteSource::Local, vec![waiter]);
            return Some(pv);
        }
        if let Some(pv) = self.routes.get(dst, ctx.now()).cloned() {
            self.route_ready(ctx, dst, pv.clone(), RouteSource::Cache, vec![waiter]);
            return Some(pv);
        }
        if let Some(p) = self.pending_routes.get_mut(&dst) {
            p.waiters.push(waiter);
            return None;
        }
        let request_id = self.next_request_id();
        self.pending_routes.insert(
            dst,
            PendingRoute {
                request_id,
                waiters: vec![waiter],
            },
        );
        match (self.cfg.clustering, self.membership.role) {
            (true, Role::Head) => ctx.timer(self.cfg.processing, Timer::LocalRoute(dst)),
            (true, Role::Member) => {
                let (Some(head), Some(pv)) = (
                    self.membership.head_addr,
                    self.membership.pv_to_head.clone(),
                ) else {
                    self.start_probe(ctx, dst);
                    return None;
                };
                let msg = ControlMessage::RouteReq {
                    origin: self.addr,
                    target: dst,
                    request_id,
                };
                self.send_unicast(ctx, head, pv, &msg, true);
                ctx.timer(
                    self.cfg.route_request_timeout,
                    Timer::RouteRequestTimeout {
                        target: dst,
                        request_id,
                    },
                );
            }
            _ => self.start_probe(ctx, dst),
        }
        None
    }

    fn finish_route(
        &mut self,
        ctx: &mut Ctx,
        target: NodeAddr,
        pv: PathVector,
        source: RouteSource,
    ) {
        self.routes.insert(target, pv.clone(), ctx.now());
        if let Some(p) = self.pending_routes.remove(&target) {
            self.route_ready(ctx, target, pv, source, p.waiters);
        }
    }

    fn bfs_pv(&mut self, src: NodeAddr, dst: NodeAddr) -> Option<PathVector> {
        self.bfs_runs += 1;
        let path = bfs_route(&self.topology, src, dst).ok()?;
        path_to_pv(&self.topology, &path).ok()
    }

    /// Route from this head to `dst`, falling back to the reverse of the
    /// request's recorded path.
    pub(crate) fn reply_route(&mut self, dst: NodeAddr, header: &PvhHeader) -> Option<PathVector> {
        if self.membership.role == Role::Head {
            if let Some(pv) = self.bfs_pv(self.addr, dst) {
                return Some(pv);
            }
        }
        header.rev_path.as_ref().map(reverse_to_pv)
    }

    pub(crate) fn on_local_route(&mut self, ctx: &mut Ctx, target: NodeAddr) {
        if !self.pending_routes.contains_key(&target) {
            return;
        }
        match self.bfs_pv(self.addr, target) {
            Some(pv) => self.finish_route(ctx, target, pv, RouteSource::Head),
            None => self.start_probe(ctx, target),
        }
    }

    /// Head side: computes the requester's route over the cluster topology.
    pub(crate) fn on_route_request(
        &mut self,
        ctx: &mut Ctx,
        header: &PvhHeader,
        origin: NodeAddr,
        target: NodeAddr,
        request_id: u32,
    ) {
        let route = if self.membership.role == Role::Head {
            self.bfs_pv(origin, target)
        } else {
            None
        };
        let Some(back) = self.reply_route(origin, header) else {
            return;
        };
        let msg = ControlMessage::RouteRep {
            target,
            request_id,
            route,
        };
        self.send_unicast(ctx, origin, back, &msg, false);
    }

    pub(crate) fn on_route_reply(
        &mut self,
        ctx: &mut Ctx,
        target: NodeAddr,
        request_id: u32,
        route: Option<PathVector>,
    ) {
        if self
            .pending_routes
            .get(&target)
            .is_none_or(|p| p.request_id != request_id)
        {
            return;
        }
        match route {
            Some(pv) => self.finish_route(ctx, target, pv, RouteSource::Head),
            None => self.start_probe(ctx, target),
        }
    }

    pub(crate) fn on_route_request_timeout(
        &mut self,
        ctx: &mut Ctx,
        target: NodeAddr,
        request_id: u32,
    ) {
        if self
            .pending_routes
            .get(&target)
            .is_some_and(|p| p.request_id == request_id)
        {
            self.start_probe(ctx, target);
        }
    }

    /// Floods a probe for `target`; the pending route takes a fresh id.
    pub fn start_probe(&mut self, ctx: &mut Ctx, target: NodeAddr) {
        let request_id = self.next_request_id();
        self.pending_routes
            .entry(target)
            .or_insert_with(|| PendingRoute {
                request_id,
                waiters: vec![Waiter::Report],
            })
            .request_id = request_id;
        self.dedup.insert(self.addr, request_id, ctx.now());
        let msg = ControlMessage::ProbeReq {
            origin: self.addr,
            request_id,
            target: Some(target),
            service: None,
            hops_remaining: self.cfg.probe_hop_limit,
            rev_path: RevPath::new(),
        };
        self.flood(ctx, &msg, None);
        ctx.timer(
            self.cfg.probe_timeout,
            Timer::ProbeTimeout { target, request_id },
        );
    }

    pub(crate) fn on_probe_timeout(&mut self, ctx: &mut Ctx, target: NodeAddr, request_id: u32) {
        if self
            .pending_routes
            .get(&target)
            .is_some_and(|p| p.request_id == request_id)
        {
            let p = self.pending_routes.remove(&target).expect("checked above");
            self.route_failed(ctx, target, p.waiters);
        }
    }

    /// Relays a probe once per (origin, id). The target, or for service
    /// probes any node that can name a provider, answers instead of relaying.
    pub(crate) fn on_probe(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        msg: ControlMessage,
    ) {
        let ControlMessage::ProbeReq {
            origin,
            request_id,
            target,
            service,
            hops_remaining,
            rev_path,
        } = msg
        else {
            return;
        };
        if origin == self.addr || !self.dedup.insert(origin, request_id, ctx.now()) {
            return;
        }
        let Ok(rev) = record_reverse_hop(rev_path, rx_nic, smac, self.link_kind(rx_nic)) else {
            return;
        };
        let answer = match (&target, &service) {
            (Some(t), _) if *t == self.addr => Some(None),
            // members leave service answers to their head, which holds their registrations
            (_, Some(name)) if self.membership.role != Role::Member => {
                self.lookup_provider(name).map(Some)
            }
            _ => None,
        };
        if let Some(provider) = answer {
            let reply = ControlMessage::ProbeRep {
                origin,
                request_id,
                responder: self.addr,
                service,
                provider,
            };
            self.send_unicast(ctx, origin, reverse_to_pv(&rev), &reply, true);
            return;
        }
        if hops_remaining > 1 {
            let relay = ControlMessage::ProbeReq {
                origin,
                request_id,
                target,
                service,
                hops_remaining: hops_remaining - 1,
                rev_path: rev,
            };
            self.flood(ctx, &relay, Some(rx_nic));
        }
    }

    /// The reply's recorded path, reversed, is this node's route to the responder.
    pub(crate) fn on_probe_reply(
        &mut self,
        ctx: &mut Ctx,
        header: &PvhHeader,
        request_id: u32,
        responder: NodeAddr,
        service: Option<String>,
        provider: Option<NodeAddr>,
    ) {
        if let Some(name) = service {
            self.on_service_probe_reply(ctx, request_id, name, provider);
            return;
        }
        if self
            .pending_routes
            .get(&responder)
            .is_none_or(|p| p.request_id != request_id)
        {
            return;
        }
        let Some(rev) = header.rev_path.as_ref() else {
            return;
        };
        self.finish_route(ctx, responder, reverse_to_pv(rev), RouteSource::Probe);
    }
}
