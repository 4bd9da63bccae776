//! Control-plane framing and messages.
//!
//! Every control frame starts with a 4-octet prefix: a 2-octet codec id and a
//! 2-octet payload length, both big-endian. The length lets the receiver cut
//! off the zero padding Ethernet adds to short frames. With codec
//! [`CODEC_TLV_V1`] the payload is a message type octet followed by TLVs
//! (`tag: u8, len: u16 BE, value`). Unknown TLV tags are skipped.
//!
//! TLV tags used by each message:
//!
//! | message     | tags |
//! |-------------|------|
//! | CAP_BCAST   | ORIGIN, CAPABILITY, HOP_LIMIT |
//! | HEAD_DECL   | HEAD, CAPABILITY, HOP_LIMIT, SEQUENCE, REV_PATH |
//! | JOIN_REQ    | ORIGIN, HEAD |
//! | JOIN_ACK    | HEAD, ORIGIN |
//! | SCAN_REQ    | ORIGIN, REQUEST_ID, HOP_LIMIT, REV_PATH |
//! | SCAN_REP    | ORIGIN, REQUEST_ID, HEAD, CAPABILITY, DISTANCE, PATH_VECTOR |
//! | HELLO       | ORIGIN |
//! | NBR_UPLOAD  | ORIGIN, NEIGHBOR* |
//! | ROUTE_REQ   | ORIGIN, TARGET, REQUEST_ID |
//! | ROUTE_REP   | TARGET, REQUEST_ID, STATUS, PATH_VECTOR? |
//! | PROBE_REQ   | ORIGIN, REQUEST_ID, TARGET?, SERVICE?, HOP_LIMIT, REV_PATH |
//! | PROBE_REP   | ORIGIN, REQUEST_ID, RESPONDER, SERVICE?, PROVIDER? |
//! | SVC_REG     | PROVIDER, SERVICE |
//! | SVC_PUSH    | PROVIDER, SERVICE, REQUEST_ID, HOP_LIMIT |
//! | SVC_QUERY   | ORIGIN, REQUEST_ID, SERVICE, HOP_LIMIT, REV_PATH |
//! | SVC_REP     | REQUEST_ID, SERVICE, PROVIDER? |

use std::collections::BTreeMap;
use std::fmt;

use super::{MacAddr, NicId, NodeAddr, PathVector, RevPath, WireError};

pub const CODEC_TLV_V1: u16 = 0x0001;
pub const CONTROL_PREFIX_LEN: usize = 4;
pub const MAX_SERVICE_NAME_LEN: usize = 64;

pub mod tlv {
    pub const ORIGIN: u8 = 0x01;
    pub const CAPABILITY: u8 = 0x02;
    pub const HOP_LIMIT: u8 = 0x03;
    pub const REV_PATH: u8 = 0x04;
    pub const PATH_VECTOR: u8 = 0x05;
    pub const HEAD: u8 = 0x06;
    pub const TARGET: u8 = 0x07;
    pub const REQUEST_ID: u8 = 0x08;
    pub const NEIGHBOR: u8 = 0x09;
    pub const SERVICE: u8 = 0x0a;
    pub const PROVIDER: u8 = 0x0b;
    pub const DISTANCE: u8 = 0x0c;
    pub const STATUS: u8 = 0x0d;
    pub const SEQUENCE: u8 = 0x0e;
    pub const RESPONDER: u8 = 0x0f;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MsgType {
    CapBcast = 0x01,
    HeadDecl = 0x02,
    JoinReq = 0x03,
    JoinAck = 0x04,
    ScanReq = 0x05,
    ScanRep = 0x06,
    Hello = 0x07,
    NbrUpload = 0x08,
    RouteReq = 0x09,
    RouteRep = 0x0a,
    ProbeReq = 0x0b,
    ProbeRep = 0x0c,
    SvcReg = 0x0d,
    SvcPush = 0x0e,
    SvcQuery = 0x0f,
    SvcRep = 0x10,
}

impl MsgType {
    pub const ALL: [MsgType; 16] = [
        MsgType::CapBcast,
        MsgType::HeadDecl,
        MsgType::JoinReq,
        MsgType::JoinAck,
        MsgType::ScanReq,
        MsgType::ScanRep,
        MsgType::Hello,
        MsgType::NbrUpload,
        MsgType::RouteReq,
        MsgType::RouteRep,
        MsgType::ProbeReq,
        MsgType::ProbeRep,
        MsgType::SvcReg,
        MsgType::SvcPush,
        MsgType::SvcQuery,
        MsgType::SvcRep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MsgType::CapBcast => "CAP_BCAST",
            MsgType::HeadDecl => "HEAD_DECL",
            MsgType::JoinReq => "JOIN_REQ",
            MsgType::JoinAck => "JOIN_ACK",
            MsgType::ScanReq => "SCAN_REQ",
            MsgType::ScanRep => "SCAN_REP",
            MsgType::Hello => "HELLO",
            MsgType::NbrUpload => "NBR_UPLOAD",
            MsgType::RouteReq => "ROUTE_REQ",
            MsgType::RouteRep => "ROUTE_REP",
            MsgType::ProbeReq => "PROBE_REQ",
            MsgType::ProbeRep => "PROBE_REP",
            MsgType::SvcReg => "SVC_REG",
            MsgType::SvcPush => "SVC_PUSH",
            MsgType::SvcQuery => "SVC_QUERY",
            MsgType::SvcRep => "SVC_REP",
        }
    }
}

impl TryFrom<u8> for MsgType {
    type Error = WireError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        MsgType::ALL
            .get((v as usize).wrapping_sub(1))
            .copied()
            .ok_or(WireError::UnknownMessageType(v))
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of an uploaded neighbor table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NeighborRecord {
    pub addr: NodeAddr,
    pub nic: NicId,
    pub dmac: Option<MacAddr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RouteStatus {
    Found = 0,
    NotInCluster = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControlMessage {
    CapBcast {
        origin: NodeAddr,
        capability: f64,
        hops_remaining: u8,
    },
    HeadDecl {
        head: NodeAddr,
        capability: f64,
        hops_remaining: u8,
        seq: u32,
        rev_path: RevPath,
    },
    JoinReq {
        member: NodeAddr,
        head: NodeAddr,
    },
    JoinAck {
        head: NodeAddr,
        member: NodeAddr,
    },
    ScanReq {
        origin: NodeAddr,
        request_id: u32,
        hops_remaining: u8,
        rev_path: RevPath,
    },
    ScanRep {
        responder: NodeAddr,
        request_id: u32,
        head: NodeAddr,
        head_capability: f64,
        distance: u8,
        pv_to_head: PathVector,
    },
    Hello {
        origin: NodeAddr,
    },
    NbrUpload {
        origin: NodeAddr,
        neighbors: Vec<NeighborRecord>,
    },
    RouteReq {
        origin: NodeAddr,
        target: NodeAddr,
        request_id: u32,
    },
    RouteRep {
        target: NodeAddr,
        request_id: u32,
        /// `None` means the target is not in the head's cluster topology.
        route: Option<PathVector>,
    },
    ProbeReq {
        origin: NodeAddr,
        request_id: u32,
        target: Option<NodeAddr>,
        service: Option<String>,
        hops_remaining: u8,
        rev_path: RevPath,
    },
    ProbeRep {
        origin: NodeAddr,
        request_id: u32,
        responder: NodeAddr,
        service: Option<String>,
        provider: Option<NodeAddr>,
    },
    SvcReg {
        provider: NodeAddr,
        name: String,
    },
    SvcPush {
        provider: NodeAddr,
        name: String,
        request_id: u32,
        hops_remaining: u8,
    },
    SvcQuery {
        origin: NodeAddr,
        request_id: u32,
        name: String,
        hops_remaining: u8,
        rev_path: RevPath,
    },
    SvcRep {
        request_id: u32,
        name: String,
        provider: Option<NodeAddr>,
    },
}

struct TlvWriter {
    buf: Vec<u8>,
}

impl TlvWriter {
    fn new(msg_type: MsgType) -> Self {
        TlvWriter {
            buf: vec![msg_type as u8],
        }
    }

    fn raw(&mut self, tag: u8, value: &[u8]) -> Result<&mut Self, WireError> {
        let len = u16::try_from(value.len()).map_err(|_| WireError::Oversize(value.len()))?;
        self.buf.push(tag);
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(value);
        Ok(self)
    }

    fn addr(&mut self, tag: u8, addr: NodeAddr) -> Result<&mut Self, WireError> {
        self.raw(tag, &addr.0)
    }

    fn u8(&mut self, tag: u8, v: u8) -> Result<&mut Self, WireError> {
        self.raw(tag, &[v])
    }

    fn u32(&mut self, tag: u8, v: u32) -> Result<&mut Self, WireError> {
        self.raw(tag, &v.to_be_bytes())
    }

    fn f64(&mut self, tag: u8, v: f64) -> Result<&mut Self, WireError> {
        self.raw(tag, &v.to_bits().to_be_bytes())
    }

    fn name(&mut self, tag: u8, name: &str) -> Result<&mut Self, WireError> {
        if name.len() > MAX_SERVICE_NAME_LEN {
            return Err(WireError::BadField {
                tag,
                reason: "service name longer than 64 octets",
            });
        }
        self.raw(tag, name.as_bytes())
    }

    fn rev(&mut self, rev: &RevPath) -> Result<&mut Self, WireError> {
        let mut v = Vec::with_capacity(rev.wire_len());
        rev.encode_into(&mut v);
        self.raw(tlv::REV_PATH, &v)
    }

    fn pv(&mut self, pv: &PathVector) -> Result<&mut Self, WireError> {
        self.raw(tlv::PATH_VECTOR, &pv.to_bytes())
    }
}

/// TLVs of one message, first occurrence wins except for repeated tags.
struct TlvReader<'a> {
    fields: BTreeMap<u8, Vec<&'a [u8]>>,
}

impl<'a> TlvReader<'a> {
    fn parse(mut buf: &'a [u8]) -> Result<Self, WireError> {
        let mut fields: BTreeMap<u8, Vec<&'a [u8]>> = BTreeMap::new();
        while !buf.is_empty() {
            if buf.len() < 3 {
                return Err(WireError::Truncated {
                    needed: 3,
                    available: buf.len(),
                });
            }
            let tag = buf[0];
            let len = u16::from_be_bytes([buf[1], buf[2]]) as usize;
            let value = buf.get(3..3 + len).ok_or(WireError::Truncated {
                needed: 3 + len,
                available: buf.len(),
            })?;
            fields.entry(tag).or_default().push(value);
            buf = &buf[3 + len..];
        }
        Ok(TlvReader { fields })
    }

    fn opt(&self, tag: u8) -> Option<&'a [u8]> {
        self.fields.get(&tag).and_then(|v| v.first().copied())
    }

    fn req(&self, tag: u8) -> Result<&'a [u8], WireError> {
        self.opt(tag).ok_or(WireError::MissingField(tag))
    }

    fn all(&self, tag: u8) -> &[&'a [u8]] {
        self.fields.get(&tag).map_or(&[], |v| v.as_slice())
    }

    fn fixed<const N: usize>(tag: u8, v: &[u8]) -> Result<[u8; N], WireError> {
        v.try_into().map_err(|_| WireError::BadField {
            tag,
            reason: "unexpected length",
        })
    }

    fn addr(&self, tag: u8) -> Result<NodeAddr, WireError> {
        Ok(NodeAddr(Self::fixed(tag, self.req(tag)?)?))
    }

    fn opt_addr(&self, tag: u8) -> Result<Option<NodeAddr>, WireError> {
        self.opt(tag)
            .map(|v| Self::fixed(tag, v).map(NodeAddr))
            .transpose()
    }

    fn u8(&self, tag: u8) -> Result<u8, WireError> {
        Ok(Self::fixed::<1>(tag, self.req(tag)?)?[0])
    }

    fn u32(&self, tag: u8) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(Self::fixed(tag, self.req(tag)?)?))
    }

    fn f64(&self, tag: u8) -> Result<f64, WireError> {
        Ok(f64::from_bits(u64::from_be_bytes(Self::fixed(
            tag,
            self.req(tag)?,
        )?)))
    }

    fn decode_name(tag: u8, v: &[u8]) -> Result<String, WireError> {
        if v.len() > MAX_SERVICE_NAME_LEN {
            return Err(WireError::BadField {
                tag,
                reason: "service name longer than 64 octets",
            });
        }
        String::from_utf8(v.to_vec()).map_err(|_| WireError::BadField {
            tag,
            reason: "service name not utf-8",
        })
    }

    fn name(&self, tag: u8) -> Result<String, WireError> {
        Self::decode_name(tag, self.req(tag)?)
    }

    fn opt_name(&self, tag: u8) -> Result<Option<String>, WireError> {
        self.opt(tag).map(|v| Self::decode_name(tag, v)).transpose()
    }

    fn rev(&self) -> Result<RevPath, WireError> {
        RevPath::decode(self.req(tlv::REV_PATH)?)
    }

    fn pv(&self, tag: u8) -> Result<PathVector, WireError> {
        let v = self.req(tag)?;
        let (pv, used) = PathVector::decode(v)?;
        if used != v.len() {
            return Err(WireError::BadField {
                tag,
                reason: "trailing octets after terminator",
            });
        }
        Ok(pv)
    }
}

fn encode_neighbor(n: &NeighborRecord) -> Vec<u8> {
    let mut v = Vec::with_capacity(13);
    v.extend_from_slice(&n.addr.0);
    v.push(n.nic.get());
    if let Some(dmac) = n.dmac {
        v.extend_from_slice(&dmac.0);
    }
    v
}

fn decode_neighbor(v: &[u8]) -> Result<NeighborRecord, WireError> {
    let bad = |reason| WireError::BadField {
        tag: tlv::NEIGHBOR,
        reason,
    };
    if v.len() != 7 && v.len() != 13 {
        return Err(bad("neighbor record must be 7 or 13 octets"));
    }
    let addr = NodeAddr(v[0..6].try_into().expect("six octets"));
    let nic = NicId::new(v[6]).ok_or(bad("nic id out of range"))?;
    let dmac = (v.len() == 13).then(|| MacAddr(v[7..13].try_into().expect("six octets")));
    Ok(NeighborRecord { addr, nic, dmac })
}

impl ControlMessage {
    pub fn msg_type(&self) -> MsgType {
        match self {
            ControlMessage::CapBcast { .. } => MsgType::CapBcast,
            ControlMessage::HeadDecl { .. } => MsgType::HeadDecl,
            ControlMessage::JoinReq { .. } => MsgType::JoinReq,
            ControlMessage::JoinAck { .. } => MsgType::JoinAck,
            ControlMessage::ScanReq { .. } => MsgType::ScanReq,
            ControlMessage::ScanRep { .. } => MsgType::ScanRep,
            ControlMessage::Hello { .. } => MsgType::Hello,
            ControlMessage::NbrUpload { .. } => MsgType::NbrUpload,
            ControlMessage::RouteReq { .. } => MsgType::RouteReq,
            ControlMessage::RouteRep { .. } => MsgType::RouteRep,
            ControlMessage::ProbeReq { .. } => MsgType::ProbeReq,
            ControlMessage::ProbeRep { .. } => MsgType::ProbeRep,
            ControlMessage::SvcReg { .. } => MsgType::SvcReg,
            ControlMessage::SvcPush { .. } => MsgType::SvcPush,
            ControlMessage::SvcQuery { .. } => MsgType::SvcQuery,
            ControlMessage::SvcRep { .. } => MsgType::SvcRep,
        }
    }

    /// Message type octet followed by TLVs (the frame payload).
    pub fn encode_payload(&self) -> Result<Vec<u8>, WireError> {
        use tlv::*;
        let mut w = TlvWriter::new(self.msg_type());
        match self {
            ControlMessage::CapBcast {
                origin,
                capability,
                hops_remaining,
            } => {
                w.addr(ORIGIN, *origin)?
                    .f64(CAPABILITY, *capability)?
                    .u8(HOP_LIMIT, *hops_remaining)?;
            }
            ControlMessage::HeadDecl {
                head,
                capability,
                hops_remaining,
                seq,
                rev_path,
            } => {
                w.addr(HEAD, *head)?
                    .f64(CAPABILITY, *capability)?
                    .u8(HOP_LIMIT, *hops_remaining)?
                    .u32(SEQUENCE, *seq)?
                    .rev(rev_path)?;
            }
            ControlMessage::JoinReq { member, head } => {
                w.addr(ORIGIN, *member)?.addr(HEAD, *head)?;
            }
            ControlMessage::JoinAck { head, member } => {
                w.addr(HEAD, *head)?.addr(ORIGIN, *member)?;
            }
            ControlMessage::ScanReq {
                origin,
                request_id,
                hops_remaining,
                rev_path,
            } => {
                w.addr(ORIGIN, *origin)?
                    .u32(REQUEST_ID, *request_id)?
                    .u8(HOP_LIMIT, *hops_remaining)?
                    .rev(rev_path)?;
            }
            ControlMessage::ScanRep {
                responder,
                request_id,
                head,
                head_capability,
                distance,
                pv_to_head,
            } => {
                w.addr(ORIGIN, *responder)?
                    .u32(REQUEST_ID, *request_id)?
                    .addr(HEAD, *head)?
                    .f64(CAPABILITY, *head_capability)?
                    .u8(DISTANCE, *distance)?
                    .pv(pv_to_head)?;
            }
            ControlMessage::Hello { origin } => {
                w.addr(ORIGIN, *origin)?;
            }
            ControlMessage::NbrUpload { origin, neighbors } => {
                w.addr(ORIGIN, *origin)?;
                for n in neighbors {
                    w.raw(NEIGHBOR, &encode_neighbor(n))?;
                }
            }
            ControlMessage::RouteReq {
                origin,
                target,
                request_id,
            } => {
                w.addr(ORIGIN, *origin)?
                    .addr(TARGET, *target)?
                    .u32(REQUEST_ID, *request_id)?;
            }
            ControlMessage::RouteRep {
                target,
                request_id,
                route,
            } => {
                w.addr(TARGET, *target)?.u32(REQUEST_ID, *request_id)?;
                match route {
                    Some(pv) => {
                        w.u8(STATUS, RouteStatus::Found as u8)?.pv(pv)?;
                    }
                    None => {
                        w.u8(STATUS, RouteStatus::NotInCluster as u8)?;
                    }
                }
            }
            ControlMessage::ProbeReq {
                origin,
                request_id,
                target,
                service,
                hops_remaining,
                rev_path,
            } => {
                w.addr(ORIGIN, *origin)?.u32(REQUEST_ID, *request_id)?;
                if let Some(t) = target {
                    w.addr(TARGET, *t)?;
                }
                if let Some(s) = service {
                    w.name(SERVICE, s)?;
                }
                w.u8(HOP_LIMIT, *hops_remaining)?.rev(rev_path)?;
            }
            ControlMessage::ProbeRep {
                origin,
                request_id,
                responder,
                service,
                provider,
            } => {
                w.addr(ORIGIN, *origin)?
                    .u32(REQUEST_ID, *request_id)?
                    .addr(RESPONDER, *responder)?;
                if let Some(s) = service {
                    w.name(SERVICE, s)?;
                }
                if let Some(p) = provider {
                    w.addr(PROVIDER, *p)?;
                }
            }
            ControlMessage::SvcReg { provider, name } => {
                w.addr(PROVIDER, *provider)?.name(SERVICE, name)?;
            }
            ControlMessage::SvcPush {
                provider,
                name,
                request_id,
                hops_remaining,
            } => {
                w.addr(PROVIDER, *provider)?
                    .name(SERVICE, name)?
                    .u32(REQUEST_ID, *request_id)?
                    .u8(HOP_LIMIT, *hops_remaining)?;
            }
            ControlMessage::SvcQuery {
                origin,
                request_id,
                name,
                hops_remaining,
                rev_path,
            } => {
                w.addr(ORIGIN, *origin)?
                    .u32(REQUEST_ID, *request_id)?
                    .name(SERVICE, name)?
                    .u8(HOP_LIMIT, *hops_remaining)?
                    .rev(rev_path)?;
            }
            ControlMessage::SvcRep {
                request_id,
                name,
                provider,
            } => {
                w.u32(REQUEST_ID, *request_id)?.name(SERVICE, name)?;
                if let Some(p) = provider {
                    w.addr(PROVIDER, *p)?;
                }
            }
        }
        Ok(w.buf)
    }

    pub fn decode_payload(payload: &[u8]) -> Result<Self, WireError> {
        use tlv::*;
        let (&type_octet, rest) = payload.split_first().ok_or(WireError::Truncated {
            needed: 1,
            available: 0,
        })?;
        let ty = MsgType::try_from(type_octet)?;
        let r = TlvReader::parse(rest)?;
        let msg = match ty {
            MsgType::CapBcast => ControlMessage::CapBcast {
                origin: r.addr(ORIGIN)?,
                capability: r.f64(CAPABILITY)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
            },
            MsgType::HeadDecl => ControlMessage::HeadDecl {
                head: r.addr(HEAD)?,
                capability: r.f64(CAPABILITY)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
                seq: r.u32(SEQUENCE)?,
                rev_path: r.rev()?,
            },
            MsgType::JoinReq => ControlMessage::JoinReq {
                member: r.addr(ORIGIN)?,
                head: r.addr(HEAD)?,
            },
            MsgType::JoinAck => ControlMessage::JoinAck {
                head: r.addr(HEAD)?,
                member: r.addr(ORIGIN)?,
            },
            MsgType::ScanReq => ControlMessage::ScanReq {
                origin: r.addr(ORIGIN)?,
                request_id: r.u32(REQUEST_ID)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
                rev_path: r.rev()?,
            },
            MsgType::ScanRep => ControlMessage::ScanRep {
                responder: r.addr(ORIGIN)?,
                request_id: r.u32(REQUEST_ID)?,
                head: r.addr(HEAD)?,
                head_capability: r.f64(CAPABILITY)?,
                distance: r.u8(DISTANCE)?,
                pv_to_head: r.pv(PATH_VECTOR)?,
            },
            MsgType::Hello => ControlMessage::Hello {
                origin: r.addr(ORIGIN)?,
            },
            MsgType::NbrUpload => ControlMessage::NbrUpload {
                origin: r.addr(ORIGIN)?,
                neighbors: r
                    .all(NEIGHBOR)
                    .iter()
                    .map(|v| decode_neighbor(v))
                    .collect::<Result<_, _>>()?,
            },
            MsgType::RouteReq => ControlMessage::RouteReq {
                origin: r.addr(ORIGIN)?,
                target: r.addr(TARGET)?,
                request_id: r.u32(REQUEST_ID)?,
            },
            MsgType::RouteRep => {
                let route = match r.u8(STATUS)? {
                    0 => Some(r.pv(PATH_VECTOR)?),
                    1 => None,
                    _ => {
                        return Err(WireError::BadField {
                            tag: STATUS,
                            reason: "unknown route status",
                        })
                    }
                };
                ControlMessage::RouteRep {
                    target: r.addr(TARGET)?,
                    request_id: r.u32(REQUEST_ID)?,
                    route,
                }
            }
            MsgType::ProbeReq => ControlMessage::ProbeReq {
                origin: r.addr(ORIGIN)?,
                request_id: r.u32(REQUEST_ID)?,
                target: r.opt_addr(TARGET)?,
                service: r.opt_name(SERVICE)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
                rev_path: r.rev()?,
            },
            MsgType::ProbeRep => ControlMessage::ProbeRep {
                origin: r.addr(ORIGIN)?,
                request_id: r.u32(REQUEST_ID)?,
                responder: r.addr(RESPONDER)?,
                service: r.opt_name(SERVICE)?,
                provider: r.opt_addr(PROVIDER)?,
            },
            MsgType::SvcReg => ControlMessage::SvcReg {
                provider: r.addr(PROVIDER)?,
                name: r.name(SERVICE)?,
            },
            MsgType::SvcPush => ControlMessage::SvcPush {
                provider: r.addr(PROVIDER)?,
                name: r.name(SERVICE)?,
                request_id: r.u32(REQUEST_ID)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
            },
            MsgType::SvcQuery => ControlMessage::SvcQuery {
                origin: r.addr(ORIGIN)?,
                request_id: r.u32(REQUEST_ID)?,
                name: r.name(SERVICE)?,
                hops_remaining: r.u8(HOP_LIMIT)?,
                rev_path: r.rev()?,
            },
            MsgType::SvcRep => ControlMessage::SvcRep {
                request_id: r.u32(REQUEST_ID)?,
                name: r.name(SERVICE)?,
                provider: r.opt_addr(PROVIDER)?,
            },
        };
        Ok(msg)
    }
}

/// Raw control frame: codec id plus length-delimited payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlFrame {
    pub codec_id: u16,
    pub payload: Vec<u8>,
}

impl ControlFrame {
    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let len = u16::try_from(self.payload.len())
            .map_err(|_| WireError::Oversize(self.payload.len()))?;
        let mut buf = Vec::with_capacity(CONTROL_PREFIX_LEN + self.payload.len());
        buf.extend_from_slice(&self.codec_id.to_be_bytes());
        buf.extend_from_slice(&len.to_be_bytes());
        buf.extend_from_slice(&self.payload);
        Ok(buf)
    }

    /// Reads exactly `length` payload octets and ignores anything after them.
    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        if buf.len() < CONTROL_PREFIX_LEN {
            return Err(WireError::Truncated {
                needed: CONTROL_PREFIX_LEN,
                available: buf.len(),
            });
        }
        let codec_id = u16::from_be_bytes([buf[0], buf[1]]);
        let len = u16::from_be_bytes([buf[2], buf[3]]) as usize;
        let payload = buf
            .get(CONTROL_PREFIX_LEN..CONTROL_PREFIX_LEN + len)
            .ok_or(WireError::Truncated {
                needed: CONTROL_PREFIX_LEN + len,
                available: buf.len(),
            })?;
        Ok(ControlFrame {
            codec_id,
            payload: payload.to_vec(),
        })
    }
}

pub fn encode_control(msg: &ControlMessage) -> Result<Vec<u8>, WireError> {
    ControlFrame {
        codec_id: CODEC_TLV_V1,
        payload: msg.encode_payload()?,
    }
    .encode()
}

pub fn decode_control(buf: &[u8]) -> Result<ControlMessage, WireError> {
    let frame = ControlFrame::decode(buf)?;
    if frame.codec_id != CODEC_TLV_V1 {
        return Err(WireError::UnknownCodec(frame.codec_id));
    }
    ControlMessage::decode_payload(&frame.payload)
}

/// Message type of an encoded control frame without decoding its TLVs.
pub fn peek_msg_type(buf: &[u8]) -> Option<MsgType> {
    buf.get(CONTROL_PREFIX_LEN)
        .and_then(|&b| MsgType::try_from(b).ok())
}
