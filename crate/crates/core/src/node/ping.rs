use super::{Ctx, Node, NodeEvent, Timer, Waiter};
use crate::forwarding::reverse_to_pv;
use crate::sim::Micros;
use crate::wire::{NodeAddr, PacketKind, PathVector, PvhHeader, PvhPacket};

const ECHO_PAYLOAD_LEN: usize = 16;

#[derive(Clone, Debug)]
pub(crate) struct PingSession {
    target: NodeAddr,
    count: u32,
    started: Micros,
    pv: Option<PathVector>,
    awaiting: Option<u32>,
}

fn echo_payload(session: u32, seq: u32, ts: Micros) -> Vec<u8> {
    let mut p = Vec::with_capacity(ECHO_PAYLOAD_LEN);
    p.extend_from_slice(&session.to_be_bytes());
    p.extend_from_slice(&seq.to_be_bytes());
    p.extend_from_slice(&ts.to_be_bytes());
    p
}

fn parse_echo_payload(p: &[u8]) -> Option<(u32, u32, Micros)> {
    if p.len() < ECHO_PAYLOAD_LEN {
        return None;
    }
    let session = u32::from_be_bytes(p[0..4].try_into().ok()?);
    let seq = u32::from_be_bytes(p[4..8].try_into().ok()?);
    let ts = u64::from_be_bytes(p[8..16].try_into().ok()?);
    Some((session, seq, ts))
}

impl Node {
    /// Resolves a route to `target`, then runs `count` sequential echoes.
    /// The first sample is timed from the session start, so it includes
    /// route resolution.
    pub fn start_ping(&mut self, ctx: &mut Ctx, session: u32, target: NodeAddr, count: u32) {
        self.pings.insert(
            session,
            PingSession {
                target,
                count,
                started: ctx.now(),
                pv: None,
                awaiting: None,
            },
        );
        if count == 0 {
            self.pings.remove(&session);
            ctx.report(NodeEvent::PingDone { session });
            return;
        }
        self.request_route(ctx, target, Waiter::Ping(session));
    }

    pub(crate) fn ping_route_ready(&mut self, ctx: &mut Ctx, session: u32, pv: PathVector) {
        let Some(s) = self.pings.get_mut(&session) else {
            return;
        };
        s.pv = Some(pv);
        let started = s.started;
        self.send_echo(ctx, session, 0, started);
    }

    pub(crate) fn ping_unreachable(&mut self, ctx: &mut Ctx, session: u32) {
        if let Some(s) = self.pings.remove(&session) {
            ctx.report(NodeEvent::PingFailed {
                session,
                target: s.target,
                seq: 0,
            });
        }
    }

    fn send_echo(&mut self, ctx: &mut Ctx, session: u32, seq: u32, ts: Micros) {
        let Some(s) = self.pings.get_mut(&session) else {
            return;
        };
        let Some(pv) = s.pv.clone() else {
            return;
        };
        s.awaiting = Some(seq);
        let header =
            PvhHeader::new(PacketKind::EchoRequest, self.addr, s.target, pv).with_rev_path();
        let packet = PvhPacket::new(header, echo_payload(session, seq, ts));
        ctx.timer(self.cfg.echo_timeout, Timer::EchoTimeout { session, seq });
        self.forward(ctx, packet);
    }

    pub(crate) fn on_echo_request(&mut self, ctx: &mut Ctx, packet: PvhPacket) {
        let Some(rev) = packet.header.rev_path.as_ref() else {
            return;
        };
        let pv = reverse_to_pv(rev);
        ctx.report(NodeEvent::EchoAnswered {
            from: packet.header.src,
            route: pv.clone(),
        });
        let header = PvhHeader::new(PacketKind::EchoReply, self.addr, packet.header.src, pv);
        self.forward(ctx, PvhPacket::new(header, packet.payload));
    }

    pub(crate) fn on_echo_reply(&mut self, ctx: &mut Ctx, packet: PvhPacket) {
        let Some((session, seq, ts)) = parse_echo_payload(&packet.payload) else {
            return;
        };
        let Some(s) = self.pings.get_mut(&session) else {
            return;
        };
        if s.awaiting != Some(seq) || packet.header.src != s.target {
            return;
        }
        s.awaiting = None;
        let hops = s.pv.as_ref().map_or(0, PathVector::hop_count);
        let (target, count) = (s.target, s.count);
        ctx.report(NodeEvent::EchoSample {
            session,
            target,
            seq,
            hops,
            rtt: ctx.now() - ts,
            first: seq == 0,
        });
        if seq + 1 < count {
            let now = ctx.now();
            self.send_echo(ctx, session, seq + 1, now);
        } else {
            self.pings.remove(&session);
            ctx.report(NodeEvent::PingDone { session });
        }
    }

    pub(crate) fn on_echo_timeout(&mut self, ctx: &mut Ctx, session: u32, seq: u32) {
        let Some(s) = self.pings.get(&session) else {
            return;
        };
        if s.awaiting != Some(seq) {
            return;
        }
        let target = s.target;
        self.pings.remove(&session);
        self.routes.invalidate(target);
        ctx.report(NodeEvent::PingFailed {
            session,
            target,
            seq,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_round_trip() {
        let p = echo_payload(7, 3, 123_456_789);
        assert_eq!(p.len(), ECHO_PAYLOAD_LEN);
        assert_eq!(parse_echo_payload(&p), Some((7, 3, 123_456_789)));
        assert_eq!(parse_echo_payload(&p[..15]), None);
    }
}
