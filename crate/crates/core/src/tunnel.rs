//! IP-over-PVH encapsulation.
//!
//! An IPv4 packet handed over by a virtual interface is carried verbatim as
//! the payload of a tag `0x01` PVH packet and handed back unchanged at the
//! destination.
//!
//! Binding to an OS tun device is outside this crate. [`IpEndpoint`] is the
//! contract such an adapter fills: `recv` yields raw IP packets read from the
//! device (to be encapsulated) and `send` accepts decapsulated packets to be
//! written back. The simulator uses [`MemoryEndpoint`].

use std::collections::{BTreeMap, VecDeque};
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::wire::packet::FIXED_HEADER_LEN;
use crate::wire::path::MAX_PV_WIRE_LEN;
use crate::wire::{NodeAddr, PacketKind, PathEntry, PathVector, PvhHeader, PvhPacket};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TunnelError {
    #[error("payload is not an IPv4 packet")]
    NotIpv4,
    #[error("encapsulated packet would be {0} octets, over 65535")]
    Oversize(usize),
    #[error("packet tag is not IP-over-PVH")]
    WrongTag,
    #[error("packet has not reached its destination")]
    NotDelivered,
    #[error("no node mapped for {0}")]
    Unmapped(Ipv4Addr),
    #[error("{0} is already mapped")]
    DuplicateMapping(Ipv4Addr),
}

/// /32 destination table from IPv4 address to PVH node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IpMapping {
    table: BTreeMap<Ipv4Addr, NodeAddr>,
}

impl IpMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ip: Ipv4Addr, node: NodeAddr) -> Result<(), TunnelError> {
        if self.table.contains_key(&ip) {
            return Err(TunnelError::DuplicateMapping(ip));
        }
        self.table.insert(ip, node);
        Ok(())
    }

    pub fn lookup(&self, ip: Ipv4Addr) -> Result<NodeAddr, TunnelError> {
        self.table
            .get(&ip)
            .copied()
            .ok_or(TunnelError::Unmapped(ip))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ipv4Addr, &NodeAddr)> {
        self.table.iter()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Destination address of an IPv4 packet, if the header is long enough.
pub fn ipv4_destination(ip_packet: &[u8]) -> Result<Ipv4Addr, TunnelError> {
    if ip_packet.first().map(|b| b >> 4) != Some(4) || ip_packet.len() < 20 {
        return Err(TunnelError::NotIpv4);
    }
    Ok(Ipv4Addr::new(
        ip_packet[16],
        ip_packet[17],
        ip_packet[18],
        ip_packet[19],
    ))
}

pub fn encap_ip(
    ip_packet: &[u8],
    src: NodeAddr,
    dst: NodeAddr,
    pv: PathVector,
) -> Result<PvhPacket, TunnelError> {
    if ip_packet.first().map(|b| b >> 4) != Some(4) {
        return Err(TunnelError::NotIpv4);
    }
    let packet = PvhPacket::new(
        PvhHeader::new(PacketKind::IpOverPvh, src, dst, pv),
        ip_packet.to_vec(),
    );
    let tot_len = packet.tot_len();
    if tot_len > u16::MAX as usize {
        return Err(TunnelError::Oversize(tot_len));
    }
    debug_assert!(packet.header.hdr_len() <= FIXED_HEADER_LEN + MAX_PV_WIRE_LEN);
    Ok(packet)
}

pub fn decap_ip(packet: &PvhPacket) -> Result<&[u8], TunnelError> {
    if packet.header.kind != PacketKind::IpOverPvh {
        return Err(TunnelError::WrongTag);
    }
    if packet.header.pv.leading() != PathEntry::Terminator {
        return Err(TunnelError::NotDelivered);
    }
    Ok(&packet.payload)
}

/// Raw IP packet source and sink standing in for a virtual interface.
pub trait IpEndpoint {
    /// Next packet read from the interface, if any.
    fn recv(&mut self) -> Option<Vec<u8>>;
    /// Writes a decapsulated packet back to the interface.
    fn send(&mut self, ip_packet: &[u8]);
}

#[derive(Clone, Debug, Default)]
pub struct MemoryEndpoint {
    pub outbound: VecDeque<Vec<u8>>,
    pub inbound: Vec<Vec<u8>>,
}

impl IpEndpoint for MemoryEndpoint {
    fn recv(&mut self) -> Option<Vec<u8>> {
        self.outbound.pop_front()
    }

    fn send(&mut self, ip_packet: &[u8]) {
        self.inbound.push(ip_packet.to_vec());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 1]);
    const B: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 2]);

    fn ipv4_header() -> Vec<u8> {
        let mut h = vec![
            0x45, 0, 0, 20, 0, 0, 0, 0, 64, 17, 0, 0, 10, 0, 0, 1, 10, 0, 0, 2,
        ];
        h[3] = 20;
        h
    }

    #[test]
    fn minimal_header_encapsulates_to_37_octets() {
        let p = encap_ip(&ipv4_header(), A, B, PathVector::terminator()).unwrap();
        let bytes = p.encode().unwrap();
        assert_eq!(bytes.len(), 37);
        assert_eq!(bytes[0], 0x01);
        assert_eq!(decap_ip(&p).unwrap(), ipv4_header().as_slice());
    }

    #[test]
    fn rejects_ipv6() {
        let mut ip = ipv4_header();
        ip[0] = 0x60;
        assert_eq!(
            encap_ip(&ip, A, B, PathVector::terminator()),
            Err(TunnelError::NotIpv4)
        );
        assert_eq!(
            encap_ip(&[], A, B, PathVector::terminator()),
            Err(TunnelError::NotIpv4)
        );
    }

    #[test]
    fn oversize() {
        let mut ip = vec![0u8; 65535 - 17 + 1];
        ip[0] = 0x45;
        assert!(matches!(
            encap_ip(&ip, A, B, PathVector::terminator()),
            Err(TunnelError::Oversize(_))
        ));
    }

    #[test]
    fn decap_checks_tag_and_arrival() {
        let raw = PvhPacket::new(
            PvhHeader::new(PacketKind::Raw, A, B, PathVector::terminator()),
            vec![0x45],
        );
        assert_eq!(decap_ip(&raw), Err(TunnelError::WrongTag));
        let p = encap_ip(&ipv4_header(), A, B, PathVector::p2p(&[1]).unwrap()).unwrap();
        assert_eq!(decap_ip(&p), Err(TunnelError::NotDelivered));
    }

    #[test]
    fn mapping() {
        let mut m = IpMapping::new();
        let ip = Ipv4Addr::new(10, 0, 0, 2);
        m.insert(ip, B).unwrap();
        assert_eq!(m.insert(ip, A), Err(TunnelError::DuplicateMapping(ip)));
        assert_eq!(m.lookup(ip).unwrap(), B);
        assert_eq!(ipv4_destination(&ipv4_header()).unwrap(), ip);
        assert!(m.lookup(Ipv4Addr::new(10, 0, 0, 9)).is_err());
    }

    #[test]
    fn memory_endpoint() {
        let mut ep = MemoryEndpoint::default();
        ep.outbound.push_back(ipv4_header());
        assert_eq!(ep.recv(), Some(ipv4_header()));
        assert_eq!(ep.recv(), None);
        ep.send(&[1, 2]);
        assert_eq!(ep.inbound, vec![vec![1, 2]]);
    }
}
