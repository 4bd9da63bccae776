use std::collections::{BTreeMap, BTreeSet};

use crate::sim::Micros;
use crate::wire::{MacAddr, NeighborRecord, NicId, NodeAddr};

/// How to reach the far end of an edge: emit on `nic` addressed to `dmac`,
/// or to broadcast when `dmac` is absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeLabel {
    pub nic: NicId,
    pub dmac: Option<MacAddr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: NodeAddr,
    pub label: EdgeLabel,
    pub last_refresh: Micros,
    pub expired: bool,
}

#[derive(Clone, Debug, Default)]
struct Adjacency {
    edges: Vec<Edge>,
    last_upload: Micros,
    offline: bool,
}

/// Directed labeled graph a head rebuilds from uploaded neighbor tables.
///
/// Only nodes that upload have outgoing edges. An offline node keeps its
/// record, but every edge touching it is treated as expired until it uploads
/// again.
#[derive(Clone, Debug, Default)]
pub struct TopologyGraph {
    nodes: BTreeMap<NodeAddr, Adjacency>,
}

impl TopologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces `origin`'s outgoing edges with its latest table.
    pub fn merge_upload(&mut self, origin: NodeAddr, table: &[NeighborRecord], now: Micros) {
        let mut edges: Vec<Edge> = table
            .iter()
            .filter(|r| r.addr != origin)
            .map(|r| Edge {
                to: r.addr,
                label: EdgeLabel {
                    nic: r.nic,
                    dmac: r.dmac,
                },
                last_refresh: now,
                expired: false,
            })
            .collect();
        edges.sort_by_key(|e| (e.to, e.label));
        edges.dedup_by_key(|e| (e.to, e.label));
        self.nodes.insert(
            origin,
            Adjacency {
                edges,
                last_upload: now,
                offline: false,
            },
        );
    }

    /// Adds or refreshes one edge, creating `from` as an uploader if needed.
    pub fn insert_edge(&mut self, from: NodeAddr, to: NodeAddr, label: EdgeLabel, now: Micros) {
        let adj = self.nodes.entry(from).or_insert_with(|| Adjacency {
            last_upload: now,
            ..Default::default()
        });
        match adj
            .edges
            .iter_mut()
            .find(|e| e.to == to && e.label == label)
        {
            Some(e) => {
                e.last_refresh = now;
                e.expired = false;
            }
            None => {
                adj.edges.push(Edge {
                    to,
                    label,
                    last_refresh: now,
                    expired: false,
                });
                adj.edges.sort_by_key(|e| (e.to, e.label));
            }
        }
    }

    /// Marks every uploader silent for longer than `window` as offline and
    /// expires its edges; edges into an offline node are skipped while it
    /// stays offline. Returns the nodes currently offline.
    pub fn sweep_offline(
        &mut self,
        now: Micros,
        window: Micros,
        keep: NodeAddr,
    ) -> BTreeSet<NodeAddr> {
        let mut offline = BTreeSet::new();
        for (addr, adj) in self.nodes.iter_mut() {
            if *addr != keep && now.saturating_sub(adj.last_upload) > window {
                adj.offline = true;
                for e in adj.edges.iter_mut() {
                    e.expired = true;
                }
            }
            if adj.offline {
                offline.insert(*addr);
            }
        }
        offline
    }

    pub fn forget(&mut self, addr: NodeAddr) {
        self.nodes.remove(&addr);
    }

    pub fn is_offline(&self, addr: NodeAddr) -> bool {
        self.nodes.get(&addr).is_some_and(|a| a.offline)
    }

    fn usable(&self, e: &Edge) -> bool {
        !e.expired && !self.is_offline(e.to)
    }

    /// Known as an uploader or as the target of a usable edge.
    pub fn contains(&self, addr: NodeAddr) -> bool {
        if let Some(a) = self.nodes.get(&addr) {
            return !a.offline;
        }
        self.nodes
            .values()
            .filter(|a| !a.offline)
            .any(|a| a.edges.iter().any(|e| e.to == addr && self.usable(e)))
    }

    pub fn uploaders(&self) -> impl Iterator<Item = NodeAddr> + '_ {
        self.nodes
            .iter()
            .filter(|(_, a)| !a.offline)
            .map(|(k, _)| *k)
    }

    /// Usable next hops of `from`, ascending by address, each listed once.
    pub fn neighbors(&self, from: NodeAddr) -> Vec<NodeAddr> {
        let Some(adj) = self.nodes.get(&from) else {
            return Vec::new();
        };
        if adj.offline {
            return Vec::new();
        }
        let set: BTreeSet<NodeAddr> = adj
            .edges
            .iter()
            .filter(|e| self.usable(e))
            .map(|e| e.to)
            .collect();
        set.into_iter().collect()
    }

    /// The usable edge `from -> to` with the smallest label.
    pub fn edge(&self, from: NodeAddr, to: NodeAddr) -> Option<&Edge> {
        let adj = self.nodes.get(&from)?;
        if adj.offline {
            return None;
        }
        adj.edges
            .iter()
            .filter(|e| e.to == to && self.usable(e))
            .min_by_key(|e| e.label)
    }

    pub fn edges_from(&self, from: NodeAddr) -> &[Edge] {
        self.nodes.get(&from).map_or(&[], |a| a.edges.as_slice())
    }

    pub fn last_upload(&self, addr: NodeAddr) -> Option<Micros> {
        self.nodes.get(&addr).map(|a| a.last_upload)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes
            .keys()
            .map(|k| {
                self.edges_from(*k)
                    .iter()
                    .filter(|e| self.usable(e))
                    .count()
            })
            .sum()
    }
}
