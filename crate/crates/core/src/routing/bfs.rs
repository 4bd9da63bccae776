use std::collections::{BTreeMap, VecDeque};

use super::{RoutingError, TopologyGraph};
use crate::wire::{NodeAddr, PathEntry, PathVector};

/// Minimum-hop node sequence `src ..= dst` over usable edges.
///
/// Neighbors are expanded in ascending address order, so among equal-length
/// paths the one found first along that order wins.
pub fn bfs_route(
    topo: &TopologyGraph,
    src: NodeAddr,
    dst: NodeAddr,
) -> Result<Vec<NodeAddr>, RoutingError> {
    for n in [src, dst] {
        if !topo.contains(n) {
            return Err(RoutingError::UnknownNode(n));
        }
    }
    if src == dst {
        return Ok(vec![src]);
    }
    let mut parent: BTreeMap<NodeAddr, NodeAddr> = BTreeMap::new();
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for v in topo.neighbors(u) {
            if v == src || parent.contains_key(&v) {
                continue;
            }
            parent.insert(v, u);
            if v == dst {
                let mut path = vec![dst];
                let mut cur = dst;
                while let Some(&p) = parent.get(&cur) {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Ok(path);
            }
            queue.push_back(v);
        }
    }
    Err(RoutingError::NoPath(dst))
}

/// Translates a node sequence into the per-hop egress instructions.
pub fn path_to_pv(topo: &TopologyGraph, nodes: &[NodeAddr]) -> Result<PathVector, RoutingError> {
    let mut hops = Vec::with_capacity(nodes.len().saturating_sub(1));
    for pair in nodes.windows(2) {
        let edge = topo
            .edge(pair[0], pair[1])
            .ok_or(RoutingError::MissingEdge(pair[0], pair[1]))?;
        hops.push(match edge.label.dmac {
            None => PathEntry::PointToPoint(edge.label.nic),
            Some(mac) => PathEntry::SharedMedium(edge.label.nic, mac),
        });
    }
    PathVector::from_hops(hops).map_err(|_| RoutingError::PathTooLong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::EdgeLabel;
    use crate::wire::{MacAddr, NicId};

    fn addr(n: u8) -> NodeAddr {
        NodeAddr([2, 0, 0, 0, 0, n])
    }

    fn link(g: &mut TopologyGraph, a: u8, an: u8, b: u8, bn: u8) {
        let l = |n| EdgeLabel {
            nic: NicId::new(n).unwrap(),
            dmac: None,
        };
        g.insert_edge(addr(a), addr(b), l(an), 0);
        g.insert_edge(addr(b), addr(a), l(bn), 0);
    }

    #[test]
    fn trivial_routes() {
        let mut g = TopologyGraph::new();
        link(&mut g, 1, 1, 2, 1);
        link(&mut g, 2, 2, 3, 1);
        assert_eq!(bfs_route(&g, addr(1), addr(1)).unwrap(), vec![addr(1)]);
        assert_eq!(
            bfs_route(&g, addr(1), addr(3)).unwrap(),
            vec![addr(1), addr(2), addr(3)]
        );
        assert_eq!(
            path_to_pv(&g, &[addr(1)]).unwrap(),
            PathVector::terminator()
        );
        assert_eq!(
            bfs_route(&g, addr(1), addr(9)),
            Err(RoutingError::UnknownNode(addr(9)))
        );
    }

    #[test]
    fn forwarding_scenario_route() {
        // A=1 B=2 C=3 D=4 E=5
        let mut g = TopologyGraph::new();
        link(&mut g, 1, 1, 2, 1);
        link(&mut g, 2, 2, 4, 3);
        link(&mut g, 1, 2, 4, 1);
        link(&mut g, 4, 2, 3, 1);
        link(&mut g, 3, 3, 5, 1);
        let path = bfs_route(&g, addr(1), addr(5)).unwrap();
        assert_eq!(path, vec![addr(1), addr(4), addr(3), addr(5)]);
        assert_eq!(path_to_pv(&g, &path).unwrap().to_bytes(), vec![2, 2, 3, 0]);
    }

    #[test]
    fn ties_follow_address_order() {
        // square 1-2-4, 1-3-4
        let mut g = TopologyGraph::new();
        link(&mut g, 1, 2, 3, 1);
        link(&mut g, 1, 1, 2, 1);
        link(&mut g, 2, 2, 4, 1);
        link(&mut g, 3, 2, 4, 2);
        assert_eq!(
            bfs_route(&g, addr(1), addr(4)).unwrap(),
            vec![addr(1), addr(2), addr(4)]
        );
    }

    #[test]
    fn shared_edges_carry_dmac() {
        let mut g = TopologyGraph::new();
        let m = MacAddr([2, 9, 9, 9, 9, 9]);
        g.insert_edge(
            addr(1),
            addr(2),
            EdgeLabel {
                nic: NicId::new(3).unwrap(),
                dmac: Some(m),
            },
            0,
        );
        let pv = path_to_pv(&g, &[addr(1), addr(2)]).unwrap();
        assert_eq!(pv.to_bytes(), vec![0xfd, 2, 9, 9, 9, 9, 9, 0]);
        assert_eq!(
            path_to_pv(&g, &[addr(2), addr(1)]),
            Err(RoutingError::MissingEdge(addr(2), addr(1)))
        );
    }

    #[test]
    fn disconnected() {
        let mut g = TopologyGraph::new();
        link(&mut g, 1, 1, 2, 1);
        link(&mut g, 3, 1, 4, 1);
        assert_eq!(
            bfs_route(&g, addr(1), addr(4)),
            Err(RoutingError::NoPath(addr(4)))
        );
    }
}
