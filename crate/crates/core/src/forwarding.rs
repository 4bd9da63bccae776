//! Per-hop forwarding and reverse-path handling.
//!
//! Forwarding consults nothing but the packet and the set of NICs the node
//! owns. There is no routing table.

use std::fmt;

use crate::wire::path::MAX_REV_PATH_WIRE_LEN;
use crate::wire::{MacAddr, NicId, NodeAddr, PathEntry, PathVector, PvhPacket};

pub use crate::wire::RevPath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkKind {
    PointToPoint,
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DropReason {
    MalformedPathVector,
    NoSuchNic(NicId),
    WrongDestination,
    RevPathOverflow,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::MalformedPathVector => write!(f, "malformed path vector"),
            DropReason::NoSuchNic(n) => write!(f, "no such nic {n}"),
            DropReason::WrongDestination => write!(f, "wrong destination"),
            DropReason::RevPathOverflow => write!(f, "reverse path overflow"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForwardAction {
    Deliver(PvhPacket),
    Emit {
        nic: NicId,
        dmac: MacAddr,
        packet: PvhPacket,
    },
    Drop(DropReason),
}

/// The NICs a node owns.
pub trait NicSet {
    fn has_nic(&self, nic: NicId) -> bool;
}

impl NicSet for [NicId] {
    fn has_nic(&self, nic: NicId) -> bool {
        self.contains(&nic)
    }
}

impl NicSet for Vec<NicId> {
    fn has_nic(&self, nic: NicId) -> bool {
        self.contains(&nic)
    }
}

/// One forwarding decision for a packet at the node owning `own_addr`.
///
/// A leading terminator means the packet has arrived. Otherwise the leading
/// entry is popped and the region is zero-filled at the tail, so `hdr_len`
/// and `tot_len` do not change in transit.
pub fn forward_step<N: NicSet + ?Sized>(
    mut packet: PvhPacket,
    own_addr: NodeAddr,
    nics: &N,
) -> ForwardAction {
    let entry = packet.header.pv.leading();
    let (nic, dmac) = match entry {
        PathEntry::Terminator => {
            return if packet.header.dst == own_addr {
                ForwardAction::Deliver(packet)
            } else {
                ForwardAction::Drop(DropReason::WrongDestination)
            };
        }
        PathEntry::PointToPoint(nic) => (nic, MacAddr::BROADCAST),
        PathEntry::SharedMedium(nic, dmac) => (nic, dmac),
    };
    if !nics.has_nic(nic) {
        return ForwardAction::Drop(DropReason::NoSuchNic(nic));
    }
    packet.header.pv.pop_front();
    packet.header.pv_fill += entry.wire_len();
    ForwardAction::Emit { nic, dmac, packet }
}

/// Appends the hop a packet was just received on.
pub fn record_reverse_hop(
    mut rev: RevPath,
    rx_nic: NicId,
    rx_smac: MacAddr,
    link: LinkKind,
) -> Result<RevPath, DropReason> {
    let hop = match link {
        LinkKind::PointToPoint => PathEntry::PointToPoint(rx_nic),
        LinkKind::Shared => PathEntry::SharedMedium(rx_nic, rx_smac),
    };
    if rev.wire_len() + hop.wire_len() > MAX_REV_PATH_WIRE_LEN {
        return Err(DropReason::RevPathOverflow);
    }
    rev.push(hop);
    Ok(rev)
}

/// Records the receiving hop in a packet's reverse-path extension, if it
/// carries one. Fails when the extension or the header would overflow.
pub fn record_packet_hop(
    packet: &mut PvhPacket,
    rx_nic: NicId,
    rx_smac: MacAddr,
    link: LinkKind,
) -> Result<(), DropReason> {
    let Some(rev) = packet.header.rev_path.take() else {
        return Ok(());
    };
    let rev = record_reverse_hop(rev, rx_nic, rx_smac, link)?;
    packet.header.rev_path = Some(rev);
    if packet.header.hdr_len() > u8::MAX as usize || packet.tot_len() > u16::MAX as usize {
        return Err(DropReason::RevPathOverflow);
    }
    Ok(())
}

/// The route from the last receiver back to the originator.
pub fn reverse_to_pv(rev: &RevPath) -> PathVector {
    let hops: Vec<PathEntry> = rev.hops().iter().rev().copied().collect();
    // at most 200 octets of entries, always within the 239-octet limit
    PathVector::from_hops(hops).expect("reverse path fits in a path vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{PacketKind, PvhHeader};

    const A: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 0xa]);
    const E: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 0xe]);

    fn nic(n: u8) -> NicId {
        NicId::new(n).unwrap()
    }

    fn packet(pv: PathVector) -> PvhPacket {
        PvhPacket::new(
            PvhHeader::new(PacketKind::Raw, A, E, pv),
            b"payload".to_vec(),
        )
    }

    #[test]
    fn p2p_step_shifts_by_one() {
        let p = packet(PathVector::p2p(&[2, 2, 3]).unwrap());
        let before = p.encode().unwrap();
        match forward_step(p, A, &vec![nic(1), nic(2)]) {
            ForwardAction::Emit {
                nic: n,
                dmac,
                packet,
            } => {
                assert_eq!(n, nic(2));
                assert!(dmac.is_broadcast());
                let after = packet.encode().unwrap();
                assert_eq!(&after[16..20], &[2, 3, 0, 0]);
                assert_eq!(after.len(), before.len());
                assert_eq!(after[1], before[1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn terminator_delivers_only_at_destination() {
        let p = packet(PathVector::terminator());
        assert_eq!(
            forward_step(p.clone(), E, &vec![nic(1)]),
            ForwardAction::Deliver(p.clone())
        );
        assert_eq!(
            forward_step(p, A, &vec![nic(1)]),
            ForwardAction::Drop(DropReason::WrongDestination)
        );
    }

    #[test]
    fn shared_step_uses_embedded_mac() {
        let m = MacAddr([0x10, 0x11, 0x12, 0x13, 0x14, 0x15]);
        let p = packet(PathVector::from_hops(vec![PathEntry::SharedMedium(nic(3), m)]).unwrap());
        match forward_step(p, A, &vec![nic(3)]) {
            ForwardAction::Emit {
                nic: n,
                dmac,
                packet,
            } => {
                assert_eq!(n, nic(3));
                assert_eq!(dmac, m);
                let bytes = packet.encode().unwrap();
                assert_eq!(&bytes[16..24], &[0; 8]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_nic_drops() {
        let p = packet(PathVector::p2p(&[9]).unwrap());
        assert_eq!(
            forward_step(p, A, &vec![nic(1)]),
            ForwardAction::Drop(DropReason::NoSuchNic(nic(9)))
        );
    }

    #[test]
    fn reverse_hops_accumulate() {
        let smac = MacAddr([7; 6]);
        let rev = record_reverse_hop(RevPath::new(), nic(3), smac, LinkKind::PointToPoint).unwrap();
        assert_eq!(rev.hops(), &[PathEntry::PointToPoint(nic(3))]);
        let rev = record_reverse_hop(rev, nic(5), smac, LinkKind::PointToPoint).unwrap();
        assert_eq!(
            rev.hops(),
            &[
                PathEntry::PointToPoint(nic(3)),
                PathEntry::PointToPoint(nic(5))
            ]
        );
        let rev = record_reverse_hop(RevPath::new(), nic(2), smac, LinkKind::Shared).unwrap();
        assert_eq!(rev.hops(), &[PathEntry::SharedMedium(nic(2), smac)]);
    }

    #[test]
    fn reverse_of_recorded_hops() {
        let mut rev = RevPath::new();
        for n in [3, 5, 2, 2] {
            rev = record_reverse_hop(rev, nic(n), MacAddr::BROADCAST, LinkKind::PointToPoint)
                .unwrap();
        }
        assert_eq!(reverse_to_pv(&rev).to_bytes(), vec![2, 2, 5, 3, 0]);
        assert_eq!(reverse_to_pv(&RevPath::new()), PathVector::terminator());
    }

    #[test]
    fn reverse_path_overflow() {
        let mut rev = RevPath::new();
        for _ in 0..28 {
            rev = record_reverse_hop(rev, nic(1), MacAddr([1; 6]), LinkKind::Shared).unwrap();
        }
        assert_eq!(rev.wire_len(), 196);
        assert_eq!(
            record_reverse_hop(rev.clone(), nic(1), MacAddr([1; 6]), LinkKind::Shared),
            Err(DropReason::RevPathOverflow)
        );
        for _ in 0..4 {
            rev = record_reverse_hop(rev, nic(1), MacAddr::BROADCAST, LinkKind::PointToPoint)
                .unwrap();
        }
        assert_eq!(rev.wire_len(), 200);
        assert!(
            record_reverse_hop(rev, nic(1), MacAddr::BROADCAST, LinkKind::PointToPoint).is_err()
        );
    }

    #[test]
    fn packet_hop_grows_header() {
        let mut p = packet(PathVector::p2p(&[1]).unwrap());
        p.header = p.header.with_rev_path();
        let before = p.header.hdr_len();
        record_packet_hop(&mut p, nic(4), MacAddr::BROADCAST, LinkKind::PointToPoint).unwrap();
        assert_eq!(p.header.hdr_len(), before + 1);
        let bytes = p.encode().unwrap();
        assert_eq!(PvhPacket::decode(&bytes).unwrap(), p);
    }
}
