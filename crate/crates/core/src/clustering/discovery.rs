use super::{validate_service_name, ClusterError, Role, ServiceMode};
use crate::forwarding::{record_reverse_hop, reverse_to_pv};
use crate::node::{Ctx, Node, NodeEvent, PendingQuery, QueryOrigin, Timer};
use crate::wire::{ControlMessage, MacAddr, NicId, NodeAddr, PvhHeader, RevPath};

impl Node {
    /// Publishes a service this node provides, according to the configured mode.
    pub fn register_service(&mut self, ctx: &mut Ctx, name: &str) -> Result<(), ClusterError> {
        validate_service_name(name)?;
        self.local_services.insert(name.to_string());
        match self.cfg.service_mode {
            ServiceMode::Cluster => match self.membership.role {
                Role::Head => self.registry.register(name, self.addr, ctx.now())?,
                Role::Member => {
                    if let (Some(head), Some(pv)) = (
                        self.membership.head_addr,
                        self.membership.pv_to_head.clone(),
                    ) {
                        let msg = ControlMessage::SvcReg {
                            provider: self.addr,
                            name: name.to_string(),
                        };
                        self.send_unicast(ctx, head, pv, &msg, false);
                    }
                }
                Role::Unassigned => {}
            },
            ServiceMode::Push => {
                self.pushed.insert(name.to_string(), self.addr);
                self.push_service(ctx, name);
                self.arm_service_keepalive(ctx);
            }
            ServiceMode::Pull => {}
        }
        Ok(())
    }

    fn push_service(&mut self, ctx: &mut Ctx, name: &str) {
        let request_id = self.next_request_id();
        self.dedup.insert(self.addr, request_id, ctx.now());
        let msg = ControlMessage::SvcPush {
            provider: self.addr,
            name: name.to_string(),
            request_id,
            hops_remaining: self.cfg.service_hop_limit,
        };
        self.flood(ctx, &msg, None);
    }

    pub(crate) fn arm_service_keepalive(&mut self, ctx: &mut Ctx) {
        if self.cfg.service_mode == ServiceMode::Push && !self.keepalive_armed {
            self.keepalive_armed = true;
            ctx.timer(self.cfg.service_keepalive, Timer::ServiceKeepalive);
        }
    }

    pub(crate) fn on_service_keepalive(&mut self, ctx: &mut Ctx) {
        if self.cfg.service_mode != ServiceMode::Push {
            return;
        }
        let names: Vec<String> = self.local_services.iter().cloned().collect();
        for name in names {
            self.push_service(ctx, &name);
        }
        ctx.timer(self.cfg.service_keepalive, Timer::ServiceKeepalive);
    }

    pub(crate) fn on_service_push(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        provider: NodeAddr,
        name: String,
        request_id: u32,
        hops_remaining: u8,
    ) {
        if provider == self.addr || !self.dedup.insert(provider, request_id, ctx.now()) {
            return;
        }
        self.pushed.insert(name.clone(), provider);
        if hops_remaining > 1 {
            let msg = ControlMessage::SvcPush {
                provider,
                name,
                request_id,
                hops_remaining: hops_remaining - 1,
            };
            self.flood(ctx, &msg, Some(rx_nic));
        }
    }

    pub(crate) fn on_service_register(&mut self, ctx: &mut Ctx, provider: NodeAddr, name: &str) {
        if self.membership.role == Role::Head {
            let _ = self.registry.register(name, provider, ctx.now());
        }
    }

    /// A provider this node can vouch for without asking anyone.
    pub(crate) fn lookup_provider(&self, name: &str) -> Option<NodeAddr> {
        if self.local_services.contains(name) {
            return Some(self.addr);
        }
        if self.membership.role == Role::Head {
            return self.registry.lookup(name).map(|r| r.provider);
        }
        None
    }

    /// Looks up a provider of `name`; the answer is reported as
    /// [`NodeEvent::ServiceResolved`] tagged with `query`.
    pub fn query_service(&mut self, ctx: &mut Ctx, query: u32, name: &str) {
        let now = ctx.now();
        let local = self.local_services.contains(name);
        let to_head = match (self.cfg.service_mode, self.membership.role) {
            (ServiceMode::Cluster, Role::Member) if !local => self
                .membership
                .head_addr
                .zip(self.membership.pv_to_head.clone()),
            _ => None,
        };
        if let Some((head, pv)) = to_head {
            let request_id = self.next_request_id();
            self.pending_queries.insert(
                request_id,
                PendingQuery {
                    query,
                    name: name.to_string(),
                    started: now,
                },
            );
            let msg = ControlMessage::SvcQuery {
                origin: self.addr,
                request_id,
                name: name.to_string(),
                hops_remaining: 0,
                rev_path: RevPath::new(),
            };
            self.send_unicast(ctx, head, pv, &msg, true);
            ctx.timer(self.cfg.query_timeout, Timer::QueryTimeout(request_id));
            return;
        }
        if self.cfg.service_mode == ServiceMode::Pull && !local {
            let request_id = self.next_request_id();
            self.dedup.insert(self.addr, request_id, now);
            self.pending_queries.insert(
                request_id,
                PendingQuery {
                    query,
                    name: name.to_string(),
                    started: now,
                },
            );
            let msg = ControlMessage::SvcQuery {
                origin: self.addr,
                request_id,
                name: name.to_string(),
                hops_remaining: self.cfg.service_hop_limit,
                rev_path: RevPath::new(),
            };
            self.flood(ctx, &msg, None);
            ctx.timer(self.cfg.query_timeout, Timer::QueryTimeout(request_id));
            return;
        }
        self.local_queries.insert(query, (name.to_string(), now));
        ctx.timer(self.cfg.processing, Timer::LocalQuery(query));
    }

    pub(crate) fn on_local_query(&mut self, ctx: &mut Ctx, query: u32) {
        let Some((name, started)) = self.local_queries.remove(&query) else {
            return;
        };
        let found = match self.cfg.service_mode {
            ServiceMode::Push => self.pushed.get(&name).copied(),
            _ => self.lookup_provider(&name),
        };
        if found.is_none() && self.cfg.service_mode == ServiceMode::Cluster {
            self.start_service_probe(ctx, &name, QueryOrigin::Local { query, started });
            return;
        }
        ctx.report(NodeEvent::ServiceResolved {
            query,
            name,
            provider: found,
            latency: ctx.now() - started,
        });
    }

    pub(crate) fn on_query_timeout(&mut self, ctx: &mut Ctx, request_id: u32) {
        if let Some(q) = self.pending_queries.remove(&request_id) {
            ctx.report(NodeEvent::ServiceResolved {
                query: q.query,
                name: q.name,
                provider: None,
                latency: ctx.now() - q.started,
            });
        }
    }

    pub(crate) fn on_service_reply(
        &mut self,
        ctx: &mut Ctx,
        request_id: u32,
        name: String,
        provider: Option<NodeAddr>,
    ) {
        if let Some(q) = self.pending_queries.remove(&request_id) {
            ctx.report(NodeEvent::ServiceResolved {
                query: q.query,
                name,
                provider,
                latency: ctx.now() - q.started,
            });
        }
    }

    /// Head side of a cluster-mode query: answer from the registry or probe
    /// the other clusters.
    pub(crate) fn on_head_query(
        &mut self,
        ctx: &mut Ctx,
        header: &PvhHeader,
        origin: NodeAddr,
        request_id: u32,
        name: String,
    ) {
        let Some(reply_pv) = self.reply_route(origin, header) else {
            return;
        };
        if self.membership.role != Role::Head {
            let msg = ControlMessage::SvcRep {
                request_id,
                name,
                provider: None,
            };
            self.send_unicast(ctx, origin, reply_pv, &msg, false);
            return;
        }
        match self.lookup_provider(&name) {
            Some(p) => {
                let msg = ControlMessage::SvcRep {
                    request_id,
                    name,
                    provider: Some(p),
                };
                self.send_unicast(ctx, origin, reply_pv, &msg, false);
            }
            None => self.start_service_probe(
                ctx,
                &name,
                QueryOrigin::Remote {
                    origin,
                    request_id,
                    reply_pv,
                },
            ),
        }
    }

    /// Pull mode: the provider answers along the reversed flood path.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn on_flooded_query(
        &mut self,
        ctx: &mut Ctx,
        rx_nic: NicId,
        smac: MacAddr,
        origin: NodeAddr,
        request_id: u32,
        name: String,
        hops_remaining: u8,
        rev_path: RevPath,
    ) {
        if origin == self.addr || !self.dedup.insert(origin, request_id, ctx.now()) {
            return;
        }
        let Ok(rev) = record_reverse_hop(rev_path, rx_nic, smac, self.link_kind(rx_nic)) else {
            return;
        };
        if self.local_services.contains(&name) {
            let msg = ControlMessage::SvcRep {
                request_id,
                name,
                provider: Some(self.addr),
            };
            self.send_unicast(ctx, origin, reverse_to_pv(&rev), &msg, false);
            return;
        }
        if hops_remaining > 1 {
            let msg = ControlMessage::SvcQuery {
                origin,
                request_id,
                name,
                hops_remaining: hops_remaining - 1,
                rev_path: rev,
            };
            self.flood(ctx, &msg, Some(rx_nic));
        }
    }

    fn start_service_probe(&mut self, ctx: &mut Ctx, name: &str, origin: QueryOrigin) {
        let request_id = self.next_request_id();
        self.dedup.insert(self.addr, request_id, ctx.now());
        self.service_probes
            .insert(request_id, (name.to_string(), origin));
        let msg = ControlMessage::ProbeReq {
            origin: self.addr,
            request_id,
            target: None,
            service: Some(name.to_string()),
            hops_remaining: self.cfg.probe_hop_limit,
            rev_path: RevPath::new(),
        };
        self.flood(ctx, &msg, None);
        ctx.timer(
            self.cfg.probe_timeout,
            Timer::ServiceProbeTimeout(request_id),
        );
    }

    pub(crate) fn on_service_probe_reply(
        &mut self,
        ctx: &mut Ctx,
        request_id: u32,
        name: String,
        provider: Option<NodeAddr>,
    ) {
        if let Some((_, origin)) = self.service_probes.remove(&request_id) {
            self.answer_query(ctx, origin, name, provider);
        }
    }

    pub(crate) fn on_service_probe_timeout(&mut self, ctx: &mut Ctx, request_id: u32) {
        if let Some((name, origin)) = self.service_probes.remove(&request_id) {
            self.answer_query(ctx, origin, name, None);
        }
    }

    fn answer_query(
        &mut self,
        ctx: &mut Ctx,
        origin: QueryOrigin,
        name: String,
        provider: Option<NodeAddr>,
    ) {
        match origin {
            QueryOrigin::Local { query, started } => ctx.report(NodeEvent::ServiceResolved {
                query,
                name,
                provider,
                latency: ctx.now() - started,
            }),
            QueryOrigin::Remote {
                origin,
                request_id,
                reply_pv,
            } => {
                let msg = ControlMessage::SvcRep {
                    request_id,
                    name,
                    provider,
                };
                self.send_unicast(ctx, origin, reply_pv, &msg, false);
            }
        }
    }
}
