use std::collections::BTreeMap;

use crate::sim::Micros;
use crate::wire::{NodeAddr, PathVector};

/// Destination to path vector, valid for a fixed time to live.
#[derive(Clone, Debug)]
pub struct RouteCache {
    ttl: Micros,
    entries: BTreeMap<NodeAddr, (PathVector, Micros)>,
}

impl RouteCache {
    pub fn new(ttl: Micros) -> Self {
        RouteCache {
            ttl,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, dst: NodeAddr, pv: PathVector, now: Micros) {
        self.entries.insert(dst, (pv, now));
    }

    /// The cached route, unless it is older than the TTL.
    pub fn get(&self, dst: NodeAddr, now: Micros) -> Option<&PathVector> {
        self.entries
            .get(&dst)
            .filter(|(_, at)| now.saturating_sub(*at) <= self.ttl)
            .map(|(pv, _)| pv)
    }

    pub fn invalidate(&mut self, dst: NodeAddr) {
        self.entries.remove(&dst);
    }

    pub fn purge(&mut self, now: Micros) {
        let ttl = self.ttl;
        self.entries
            .retain(|_, (_, at)| now.saturating_sub(*at) <= ttl);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Recently seen (origin, request id) pairs.
#[derive(Clone, Debug)]
pub struct ProbeDedup {
    ttl: Micros,
    seen: BTreeMap<(NodeAddr, u32), Micros>,
}

impl ProbeDedup {
    pub fn new(ttl: Micros) -> Self {
        ProbeDedup {
            ttl,
            seen: BTreeMap::new(),
        }
    }

    /// Records the pair; false if it was already seen within the TTL.
    pub fn insert(&mut self, origin: NodeAddr, request_id: u32, now: Micros) -> bool {
        match self.seen.get(&(origin, request_id)) {
            Some(at) if now.saturating_sub(*at) <= self.ttl => false,
            _ => {
                self.seen.insert((origin, request_id), now);
                true
            }
        }
    }

    pub fn contains(&self, origin: NodeAddr, request_id: u32, now: Micros) -> bool {
        self.seen
            .get(&(origin, request_id))
            .is_some_and(|at| now.saturating_sub(*at) <= self.ttl)
    }

    pub fn purge(&mut self, now: Micros) {
        let ttl = self.ttl;
        self.seen.retain(|_, at| now.saturating_sub(*at) <= ttl);
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}
