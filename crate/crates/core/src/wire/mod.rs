//! Byte-exact codecs for PVH data-plane packets and control-plane frames.
//!
//! Multi-octet integers are big-endian throughout.

mod addr;
pub mod control;
pub mod packet;
pub mod path;

use thiserror::Error;

pub use addr::{MacAddr, NodeAddr};
pub use control::{
    decode_control, encode_control, ControlFrame, ControlMessage, MsgType, NeighborRecord,
    CODEC_TLV_V1,
};
pub use packet::{decode_pvh, encode_pvh, PacketKind, PvhHeader, PvhPacket};
pub use path::{NicId, PathEntry, PathVector, RevPath};

/// EtherType of PVH data-plane frames (IEEE local experimental).
pub const ETHERTYPE_PVH_DATA: u16 = 0x88b5;
/// EtherType of PVH control-plane frames (IEEE local experimental).
pub const ETHERTYPE_PVH_CONTROL: u16 = 0x88b6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated input: need {needed} octets, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("malformed path vector")]
    MalformedPathVector,
    #[error("invalid header: {0}")]
    InvalidHeader(&'static str),
    #[error("unknown packet tag {0:#04x}")]
    UnknownTag(u8),
    #[error("path vector region of {0} octets exceeds 239")]
    PathTooLong(usize),
    #[error("reverse path of {0} octets exceeds 200")]
    RevPathTooLong(usize),
    #[error("nic id {0} outside 1..=127")]
    BadNic(u8),
    #[error("encoded size {0} exceeds 65535 octets")]
    Oversize(usize),
    #[error("unknown control codec {0:#06x}")]
    UnknownCodec(u16),
    #[error("unknown control message type {0:#04x}")]
    UnknownMessageType(u8),
    #[error("missing tlv {0:#04x}")]
    MissingField(u8),
    #[error("bad tlv {tag:#04x}: {reason}")]
    BadField { tag: u8, reason: &'static str },
    #[error("bad address {0:?}")]
    BadAddress(String),
}
