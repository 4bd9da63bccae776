#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use pvh::sim::{LinkShape, Network, Topology};
use pvh::wire::{PathEntry, PathVector};

/// Plain adjacency sets straight from the link list.
pub fn adjacency(t: &Topology) -> Vec<BTreeSet<usize>> {
    let idx = |name: &str| t.nodes.iter().position(|n| n.name == name).unwrap();
    let mut adj = vec![BTreeSet::new(); t.nodes.len()];
    for l in &t.links {
        let ends: Vec<usize> = l.attachments().iter().map(|a| idx(&a.node)).collect();
        for &a in &ends {
            for &b in &ends {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    adj
}

/// BFS distances from `src`, restricted to `allowed` nodes when given.
pub fn distances(
    adj: &[BTreeSet<usize>],
    src: usize,
    allowed: Option<&BTreeSet<usize>>,
) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v].is_none() && allowed.is_none_or(|s| s.contains(&v)) {
                dist[v] = Some(dist[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Walks `pv` hop by hop over the physical links starting at `src` and
/// returns the visited nodes, or `None` if some entry names no usable port.
pub fn walk(net: &Network, src: usize, pv: &PathVector) -> Option<Vec<usize>> {
    let t = net.topology();
    let idx = |name: &str| t.nodes.iter().position(|n| n.name == name).unwrap();
    let mut cur = src;
    let mut seen = vec![cur];
    for e in pv.entries() {
        let (nic, dmac) = match e {
            PathEntry::Terminator => return Some(seen),
            PathEntry::PointToPoint(n) => (n, None),
            PathEntry::SharedMedium(n, m) => (n, Some(m)),
        };
        let link = t.links.iter().find(|l| {
            l.attachments()
                .iter()
                .any(|a| idx(&a.node) == cur && a.nic == nic)
        })?;
        let next = match (&link.shape, dmac) {
            (LinkShape::P2p(a, b), None) => {
                if idx(&a.node) == cur && a.nic == nic {
                    idx(&b.node)
                } else {
                    idx(&a.node)
                }
            }
            (LinkShape::Shared { attachments, .. }, Some(m)) => {
                let a = attachments
                    .iter()
                    .find(|a| net.mac_of(idx(&a.node), a.nic) == Some(m))?;
                idx(&a.node)
            }
            _ => return None,
        };
        cur = next;
        seen.push(cur);
    }
    Some(seen)
}

pub fn load_scenario(name: &str) -> Topology {
    let p = format!("{}/../cli/scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    Topology::parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}
