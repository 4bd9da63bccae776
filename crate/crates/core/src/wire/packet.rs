//! Data-plane PVH packet layout.
//!
//! ```text
//!  0        1          2..4       4..10     10..16    16..
//! +-----+---------+-----------+----------+----------+------------------------+---------+
//! | tag | hdr_len | tot_len   | src_addr | dst_addr | path vector [+ revpath]| payload |
//! +-----+---------+-----------+----------+----------+------------------------+---------+
//! ```
//!
//! The path vector region keeps its size while in transit: each hop
//! left-shifts it and zero-fills the tail. When the tag's high bit is set, a
//! reverse-path section (one count octet, then entries without terminator)
//! follows the path vector region.

use super::{NodeAddr, PathVector, RevPath, WireError};

/// Octets before the path vector.
pub const FIXED_HEADER_LEN: usize = 16;
/// Smallest valid header: fixed part plus a lone terminator.
pub const MIN_HEADER_LEN: usize = FIXED_HEADER_LEN + 1;
pub const REV_PATH_FLAG: u8 = 0x80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PacketKind {
    Raw = 0x00,
    IpOverPvh = 0x01,
    EchoRequest = 0x02,
    EchoReply = 0x03,
}

impl TryFrom<u8> for PacketKind {
    type Error = WireError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0x00 => Ok(PacketKind::Raw),
            0x01 => Ok(PacketKind::IpOverPvh),
            0x02 => Ok(PacketKind::EchoRequest),
            0x03 => Ok(PacketKind::EchoReply),
            other => Err(WireError::UnknownTag(other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvhHeader {
    pub kind: PacketKind,
    pub src: NodeAddr,
    pub dst: NodeAddr,
    pub pv: PathVector,
    /// Zero octets after the terminator, left behind by forwarding shifts.
    pub pv_fill: usize,
    pub rev_path: Option<RevPath>,
}

impl PvhHeader {
    pub fn new(kind: PacketKind, src: NodeAddr, dst: NodeAddr, pv: PathVector) -> Self {
        PvhHeader {
            kind,
            src,
            dst,
            pv,
            pv_fill: 0,
            rev_path: None,
        }
    }

    pub fn with_rev_path(mut self) -> Self {
        self.rev_path = Some(RevPath::new());
        self
    }

    pub fn tag(&self) -> u8 {
        let flag = if self.rev_path.is_some() {
            REV_PATH_FLAG
        } else {
            0
        };
        self.kind as u8 | flag
    }

    /// Size of the path vector region on the wire, fill included.
    pub fn pv_region_len(&self) -> usize {
        self.pv.wire_len() + self.pv_fill
    }

    pub fn rev_section_len(&self) -> usize {
        self.rev_path.as_ref().map_or(0, |r| 1 + r.wire_len())
    }

    pub fn hdr_len(&self) -> usize {
        FIXED_HEADER_LEN + self.pv_region_len() + self.rev_section_len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PvhPacket {
    pub header: PvhHeader,
    pub payload: Vec<u8>,
}

impl PvhPacket {
    pub fn new(header: PvhHeader, payload: Vec<u8>) -> Self {
        PvhPacket { header, payload }
    }

    pub fn tot_len(&self) -> usize {
        self.header.hdr_len() + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        encode_pvh(self)
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        decode_pvh(buf)
    }
}

pub fn encode_pvh(packet: &PvhPacket) -> Result<Vec<u8>, WireError> {
    let h = &packet.header;
    if h.src.is_broadcast() || h.dst.is_broadcast() {
        return Err(WireError::InvalidHeader(
            "broadcast source or destination address",
        ));
    }
    if h.pv_region_len() > super::path::MAX_PV_WIRE_LEN {
        return Err(WireError::PathTooLong(h.pv_region_len()));
    }
    let hdr_len = h.hdr_len();
    if hdr_len > u8::MAX as usize {
        return Err(WireError::InvalidHeader("header longer than 255 octets"));
    }
    let tot_len = packet.tot_len();
    if tot_len > u16::MAX as usize {
        return Err(WireError::Oversize(tot_len));
    }

    let mut buf = Vec::with_capacity(tot_len);
    buf.push(h.tag());
    buf.push(hdr_len as u8);
    buf.extend_from_slice(&(tot_len as u16).to_be_bytes());
    buf.extend_from_slice(&h.src.0);
    buf.extend_from_slice(&h.dst.0);
    h.pv.encode_into(&mut buf);
    buf.resize(buf.len() + h.pv_fill, 0);
    if let Some(rev) = &h.rev_path {
        buf.push(rev.wire_len() as u8);
        rev.encode_into(&mut buf);
    }
    debug_assert_eq!(buf.len(), hdr_len);
    buf.extend_from_slice(&packet.payload);
    Ok(buf)
}

/// Decodes one packet. Octets past `tot_len` (link-layer padding) are ignored.
pub fn decode_pvh(buf: &[u8]) -> Result<PvhPacket, WireError> {
    if buf.len() < FIXED_HEADER_LEN {
        return Err(WireError::Truncated {
            needed: FIXED_HEADER_LEN,
            available: buf.len(),
        });
    }
    let tag = buf[0];
    let kind = PacketKind::try_from(tag & !REV_PATH_FLAG)?;
    let has_rev = tag & REV_PATH_FLAG != 0;
    let hdr_len = buf[1] as usize;
    let tot_len = u16::from_be_bytes([buf[2], buf[3]]) as usize;
    if buf.len() < tot_len {
        return Err(WireError::Truncated {
            needed: tot_len,
            available: buf.len(),
        });
    }
    if hdr_len < MIN_HEADER_LEN {
        return Err(WireError::MalformedPathVector);
    }
    if hdr_len > tot_len {
        return Err(WireError::InvalidHeader("hdr_len exceeds tot_len"));
    }
    let src = NodeAddr(buf[4..10].try_into().expect("six octets"));
    let dst = NodeAddr(buf[10..16].try_into().expect("six octets"));
    if src.is_broadcast() || dst.is_broadcast() {
        return Err(WireError::InvalidHeader(
            "broadcast source or destination address",
        ));
    }

    let region = &buf[FIXED_HEADER_LEN..hdr_len];
    let (pv, used) = PathVector::decode(region)?;
    let rest = &region[used..];

    let (pv_fill, rev_path) = if has_rev {
        // Fill octets are zero and the count octet of a non-empty reverse path
        // is not, so the first non-zero octet (if any) is the count.
        match rest.iter().position(|&b| b != 0) {
            None if rest.is_empty() => return Err(WireError::MalformedPathVector),
            None => (rest.len() - 1, RevPath::new()),
            Some(fill) => {
                let count = rest[fill] as usize;
                let entries = &rest[fill + 1..];
                if entries.len() != count {
                    return Err(WireError::MalformedPathVector);
                }
                (fill, RevPath::decode(entries)?)
            }
        }
    } else {
        if rest.iter().any(|&b| b != 0) {
            return Err(WireError::MalformedPathVector);
        }
        (rest.len(), RevPath::new())
    };

    let header = PvhHeader {
        kind,
        src,
        dst,
        pv,
        pv_fill,
        rev_path: has_rev.then_some(rev_path),
    };
    Ok(PvhPacket {
        header,
        payload: buf[hdr_len..tot_len].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{MacAddr, NicId, PathEntry};

    const A: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 0xa]);
    const E: NodeAddr = NodeAddr([2, 0, 0, 0, 0, 0xe]);

    #[test]
    fn minimal_packet_is_17_octets() {
        let p = PvhPacket::new(
            PvhHeader::new(PacketKind::Raw, A, E, PathVector::terminator()),
            vec![],
        );
        let bytes = p.encode().unwrap();
        assert_eq!(bytes.len(), 17);
        assert_eq!(bytes[1], 17);
        assert_eq!(&bytes[2..4], &[0, 17]);
        assert_eq!(decode_pvh(&bytes).unwrap(), p);
    }

    #[test]
    fn eight_hop_header_is_25_octets() {
        let pv = PathVector::p2p(&[1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        let p = PvhPacket::new(PvhHeader::new(PacketKind::Raw, A, E, pv), vec![]);
        assert_eq!(p.header.hdr_len(), 25);
        assert_eq!(p.encode().unwrap()[1], 25);
    }

    #[test]
    fn three_hop_route_bytes() {
        let pv = PathVector::p2p(&[2, 2, 3]).unwrap();
        let p = PvhPacket::new(PvhHeader::new(PacketKind::Raw, A, E, pv), b"hi".to_vec());
        let bytes = p.encode().unwrap();
        assert_eq!(&bytes[16..20], &[2, 2, 3, 0]);
        assert_eq!(&bytes[20..], b"hi");
        assert_eq!(decode_pvh(&bytes).unwrap(), p);
    }

    #[test]
    fn hdr_len_16_is_malformed() {
        let mut bytes = vec![0u8; 16];
        bytes[1] = 16;
        bytes[3] = 16;
        bytes[4] = 2;
        bytes[10] = 2;
        assert_eq!(decode_pvh(&bytes), Err(WireError::MalformedPathVector));
    }

    #[test]
    fn truncated_and_padding() {
        let p = PvhPacket::new(
            PvhHeader::new(
                PacketKind::EchoRequest,
                A,
                E,
                PathVector::p2p(&[1]).unwrap(),
            ),
            vec![9; 10],
        );
        let bytes = p.encode().unwrap();
        assert!(matches!(
            decode_pvh(&bytes[..bytes.len() - 1]),
            Err(WireError::Truncated { .. })
        ));
        let mut padded = bytes.clone();
        padded.resize(64, 0);
        assert_eq!(decode_pvh(&padded).unwrap(), p);
    }

    #[test]
    fn missing_terminator_in_region() {
        // region [5, 5] has no zero
        let mut bytes = vec![0u8, 18, 0, 18];
        bytes.extend_from_slice(&A.0);
        bytes.extend_from_slice(&E.0);
        bytes.extend_from_slice(&[5, 5]);
        assert_eq!(decode_pvh(&bytes), Err(WireError::MalformedPathVector));
    }

    #[test]
    fn shared_entry_overrunning_region() {
        let mut bytes = vec![0u8, 20, 0, 20];
        bytes.extend_from_slice(&A.0);
        bytes.extend_from_slice(&E.0);
        bytes.extend_from_slice(&[0xfe, 1, 2, 3]);
        assert_eq!(decode_pvh(&bytes), Err(WireError::MalformedPathVector));
    }

    #[test]
    fn unknown_tag() {
        let p = PvhPacket::new(
            PvhHeader::new(PacketKind::Raw, A, E, PathVector::terminator()),
            vec![],
        );
        let mut bytes = p.encode().unwrap();
        bytes[0] = 0x07;
        assert_eq!(decode_pvh(&bytes), Err(WireError::UnknownTag(7)));
    }

    #[test]
    fn rev_path_with_fill_round_trips() {
        let nic = |n| NicId::new(n).unwrap();
        let rev = RevPath::from_hops(vec![
            PathEntry::PointToPoint(nic(3)),
            PathEntry::SharedMedium(nic(2), MacAddr([9, 8, 7, 6, 5, 4])),
        ])
        .unwrap();
        let mut h = PvhHeader::new(
            PacketKind::EchoRequest,
            A,
            E,
            PathVector::p2p(&[4]).unwrap(),
        );
        h.pv_fill = 3;
        h.rev_path = Some(rev);
        let p = PvhPacket::new(h, vec![1, 2, 3]);
        assert_eq!(p.header.hdr_len(), 16 + 2 + 3 + 1 + 8);
        assert_eq!(p.header.tag(), 0x82);
        let bytes = p.encode().unwrap();
        assert_eq!(decode_pvh(&bytes).unwrap(), p);

        // empty reverse path with fill
        let mut h = PvhHeader::new(PacketKind::Raw, A, E, PathVector::terminator()).with_rev_path();
        h.pv_fill = 2;
        let p = PvhPacket::new(h, vec![]);
        assert_eq!(decode_pvh(&p.encode().unwrap()).unwrap(), p);
    }

    #[test]
    fn broadcast_addresses_rejected() {
        let p = PvhPacket::new(
            PvhHeader::new(
                PacketKind::Raw,
                NodeAddr::BROADCAST,
                E,
                PathVector::terminator(),
            ),
            vec![],
        );
        assert!(matches!(p.encode(), Err(WireError::InvalidHeader(_))));
    }

    #[test]
    fn oversize_payload() {
        let p = PvhPacket::new(
            PvhHeader::new(PacketKind::Raw, A, E, PathVector::terminator()),
            vec![0; 65535],
        );
        assert!(matches!(p.encode(), Err(WireError::Oversize(_))));
    }
}
