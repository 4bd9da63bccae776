use std::collections::BTreeSet;

use crate::wire::{NodeAddr, PathVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Role {
    #[default]
    Unassigned,
    Member,
    Head,
}

/// A node's view of the cluster it belongs to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterMembership {
    pub role: Role,
    pub head_addr: Option<NodeAddr>,
    pub head_capability: Option<f64>,
    pub pv_to_head: Option<PathVector>,
    /// Known members; populated on the head only.
    pub members: BTreeSet<NodeAddr>,
    /// 0 when invited by a head declaration, r when joined in scan round r.
    pub join_round: u32,
}

impl ClusterMembership {
    pub fn become_head(&mut self, own: NodeAddr, capability: f64) {
        self.role = Role::Head;
        self.head_addr = Some(own);
        self.head_capability = Some(capability);
        self.pv_to_head = Some(PathVector::terminator());
        self.join_round = 0;
    }

    pub fn join(
        &mut self,
        head: NodeAddr,
        capability: f64,
        pv_to_head: PathVector,
        join_round: u32,
    ) {
        self.role = Role::Member;
        self.head_addr = Some(head);
        self.head_capability = Some(capability);
        self.pv_to_head = Some(pv_to_head);
        self.members.clear();
        self.join_round = join_round;
    }

    pub fn reset(&mut self) {
        *self = ClusterMembership::default();
    }

    pub fn is_assigned(&self) -> bool {
        self.role != Role::Unassigned
    }

    /// Hops on the recorded route to the head.
    pub fn distance_to_head(&self) -> Option<usize> {
        self.pv_to_head.as_ref().map(PathVector::hop_count)
    }

    /// Role invariants: a member knows its head and a route to it; a head is its own head.
    pub fn is_consistent(&self, own: NodeAddr) -> bool {
        match self.role {
            Role::Unassigned => true,
            Role::Member => {
                self.head_addr.is_some() && self.pv_to_head.is_some() && self.head_addr != Some(own)
            }
            Role::Head => self.head_addr == Some(own),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_keep_invariants() {
        let own = NodeAddr([2, 0, 0, 0, 0, 1]);
        let head = NodeAddr([2, 0, 0, 0, 0, 9]);
        let mut m = ClusterMembership::default();
        assert!(m.is_consistent(own));
        m.join(head, 0.8, PathVector::p2p(&[1, 2]).unwrap(), 1);
        assert!(m.is_consistent(own));
        assert_eq!(m.distance_to_head(), Some(2));
        m.become_head(own, 0.9);
        assert!(m.is_consistent(own));
        assert_eq!(m.distance_to_head(), Some(0));
        m.reset();
        assert!(!m.is_assigned());
    }
}
