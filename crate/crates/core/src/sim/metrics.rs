use super::Micros;
use crate::wire::control::{peek_msg_type, CONTROL_PREFIX_LEN};
use crate::wire::{MsgType, PacketKind, ETHERTYPE_PVH_CONTROL, ETHERTYPE_PVH_DATA};

/// Message types are numbered from 1; slot 0 is unused.
pub const MSG_SLOTS: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameClass {
    /// A control message, flooded hop by hop or carried in a raw PVH packet.
    Control(MsgType),
    Data,
    Other,
}

/// Control frames are those on the control EtherType and raw-tagged PVH
/// packets, whose payload is a control frame.
pub fn classify_frame(ethertype: u16, bytes: &[u8]) -> FrameClass {
    match ethertype {
        ETHERTYPE_PVH_CONTROL => {
            peek_msg_type(bytes).map_or(FrameClass::Other, FrameClass::Control)
        }
        ETHERTYPE_PVH_DATA => {
            if bytes.len() < 2 || bytes[0] & 0x7f != PacketKind::Raw as u8 {
                return FrameClass::Data;
            }
            let hdr_len = bytes[1] as usize;
            match bytes.get(hdr_len..) {
                Some(rest) if rest.len() > CONTROL_PREFIX_LEN => {
                    peek_msg_type(rest).map_or(FrameClass::Data, FrameClass::Control)
                }
                _ => FrameClass::Data,
            }
        }
        _ => FrameClass::Other,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub ctrl_tx: u64,
    pub ctrl_rx: u64,
    pub ctrl_bytes: u64,
    pub data_tx: u64,
    pub data_rx: u64,
    pub drops: u64,
    pub by_type: [u64; MSG_SLOTS],
}

impl NodeCounters {
    pub fn sent(&self, t: MsgType) -> u64 {
        self.by_type[t as usize]
    }

    fn minus(&self, earlier: &NodeCounters) -> NodeCounters {
        let mut by_type = [0; MSG_SLOTS];
        for (i, v) in by_type.iter_mut().enumerate() {
            *v = self.by_type[i] - earlier.by_type[i];
        }
        NodeCounters {
            ctrl_tx: self.ctrl_tx - earlier.ctrl_tx,
            ctrl_rx: self.ctrl_rx - earlier.ctrl_rx,
            ctrl_bytes: self.ctrl_bytes - earlier.ctrl_bytes,
            data_tx: self.data_tx - earlier.data_tx,
            data_rx: self.data_rx - earlier.data_rx,
            drops: self.drops - earlier.drops,
            by_type,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PingSample {
    pub src: usize,
    pub dst: usize,
    pub hops: usize,
    pub seq: u32,
    pub rtt_us: Micros,
    pub first: bool,
}

/// Counter snapshot taken at a stage boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub name: String,
    pub at: Micros,
    pub counters: Vec<NodeCounters>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub nodes: Vec<NodeCounters>,
    /// Control frame copies put on the wire, one per receiving attachment.
    pub ctrl_copies: u64,
    pub ctrl_lost: u64,
    /// Copies that reached a host while it was offline.
    pub ctrl_discarded: u64,
    pub pings: Vec<PingSample>,
    pub stages: Vec<Stage>,
}

impl Metrics {
    pub fn new(nodes: usize) -> Self {
        Metrics {
            nodes: vec![NodeCounters::default(); nodes],
            ..Default::default()
        }
    }

    pub fn mark_stage(&mut self, name: &str, at: Micros) {
        self.stages.push(Stage {
            name: name.to_string(),
            at,
            counters: self.nodes.clone(),
        });
    }

    /// Per-node counter increase between two marked stages.
    pub fn between(&self, from: &str, to: &str) -> Option<Vec<NodeCounters>> {
        let a = self.stages.iter().find(|s| s.name == from)?;
        let b = self.stages.iter().find(|s| s.name == to)?;
        Some(
            b.counters
                .iter()
                .zip(&a.counters)
                .map(|(b, a)| b.minus(a))
                .collect(),
        )
    }

    pub fn total_ctrl_tx(&self) -> u64 {
        self.nodes.iter().map(|c| c.ctrl_tx).sum()
    }

    pub fn total_ctrl_rx(&self) -> u64 {
        self.nodes.iter().map(|c| c.ctrl_rx).sum()
    }

    pub fn total_sent(&self, t: MsgType) -> u64 {
        self.nodes.iter().map(|c| c.sent(t)).sum()
    }
}

pub fn sum_ctrl_tx(counters: &[NodeCounters]) -> u64 {
    counters.iter().map(|c| c.ctrl_tx).sum()
}

pub fn sum_sent(counters: &[NodeCounters], types: &[MsgType]) -> u64 {
    counters
        .iter()
        .map(|c| types.iter().map(|t| c.sent(*t)).sum::<u64>())
        .sum()
}
