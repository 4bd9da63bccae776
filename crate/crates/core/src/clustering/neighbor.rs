use std::collections::BTreeMap;

use crate::sim::Micros;
use crate::wire::{MacAddr, NeighborRecord, NicId, NodeAddr};

/// "A frame sent from `nic_id` to `dmac` (broadcast when absent) reaches `addr`."
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeighborEntry {
    pub addr: NodeAddr,
    pub nic_id: NicId,
    /// Present only for neighbors on a shared-medium link.
    pub dmac: Option<MacAddr>,
    pub last_seen: Micros,
}

impl NeighborEntry {
    pub fn record(&self) -> NeighborRecord {
        NeighborRecord {
            addr: self.addr,
            nic: self.nic_id,
            dmac: self.dmac,
        }
    }
}

/// Neighbors learned from hellos, keyed by (address, receiving NIC) since a
/// neighbor can be reachable over more than one link.
#[derive(Clone, Debug, Default)]
pub struct NeighborTable {
    entries: BTreeMap<(NodeAddr, NicId), NeighborEntry>,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn upsert(&mut self, addr: NodeAddr, nic_id: NicId, dmac: Option<MacAddr>, now: Micros) {
        self.entries.insert(
            (addr, nic_id),
            NeighborEntry {
                addr,
                nic_id,
                dmac,
                last_seen: now,
            },
        );
    }

    /// Drops entries not refreshed within `window`; returns the removed ones.
    pub fn expire(&mut self, now: Micros, window: Micros) -> Vec<NeighborEntry> {
        let mut removed = Vec::new();
        self.entries.retain(|_, e| {
            let keep = now.saturating_sub(e.last_seen) <= window;
            if !keep {
                removed.push(*e);
            }
            keep
        });
        removed
    }

    pub fn iter(&self) -> impl Iterator<Item = &NeighborEntry> {
        self.entries.values()
    }

    pub fn records(&self) -> Vec<NeighborRecord> {
        self.entries.values().map(NeighborEntry::record).collect()
    }

    pub fn get(&self, addr: NodeAddr) -> Option<&NeighborEntry> {
        self.entries
            .range((addr, NicId::new(1).unwrap())..)
            .next()
            .map(|(_, e)| e)
            .filter(|e| e.addr == addr)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}
