mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{adjacency, distances, load_scenario, walk};
use pvh::node::NodeEvent;
use pvh::sim::{random_topology, GenParams, HopDirection, Network, SimConfig};
use pvh::wire::{MsgType, PacketKind, PathVector};

fn net(file: &str) -> Network {
    let cfg = SimConfig {
        hop_log: true,
        ..SimConfig::default()
    };
    let mut n = Network::new(&load_scenario(file), 42, cfg).unwrap();
    n.converge(60_000_000).unwrap();
    n
}

#[test]
fn forwarding_scenario_route_and_traversal() {
    let mut n = net("fig_forwarding.topo");
    let (a, e) = (n.require("A").unwrap(), n.require("E").unwrap());
    let pv = n.resolve_route(a, e).unwrap();
    assert_eq!(pv, PathVector::p2p(&[2, 2, 3]).unwrap());
    assert_eq!(pv.to_bytes(), vec![2, 2, 3, 0]);

    n.clear_hop_log();
    n.ping(a, e, 1).unwrap();
    let ea = n.addr_of(e);
    let path: Vec<&str> = n
        .hop_log()
        .iter()
        .filter(|h| h.dir == HopDirection::Tx && h.kind == PacketKind::EchoRequest && h.dst == ea)
        .map(|h| n.name_of(h.node))
        .collect();
    assert_eq!(path, ["A", "D", "C"]);
    let rx: Vec<&str> = n
        .hop_log()
        .iter()
        .filter(|h| h.dir == HopDirection::Rx && h.kind == PacketKind::EchoRequest && h.dst == ea)
        .map(|h| n.name_of(h.node))
        .collect();
    assert_eq!(rx, ["D", "C", "E"]);
}

#[test]
fn reverse_scenario_route() {
    let mut n = net("fig_reverse.topo");
    let (b, g) = (n.require("B").unwrap(), n.require("G").unwrap());
    let cursor = n.report_count();
    n.ping(b, g, 1).unwrap();
    let back = n
        .reports_since(cursor)
        .find_map(|(node, ev)| match ev {
            NodeEvent::EchoAnswered { route, .. } if node == g => Some(route.clone()),
            _ => None,
        })
        .unwrap();
    assert_eq!(back.to_bytes(), vec![2, 2, 5, 3, 0]);
    assert_eq!(walk(&n, g, &back).unwrap().last(), Some(&b));
}

#[test]
fn intra_cluster_routes_are_shortest() {
    let (mut checked, mut split) = (0, 0);
    for seed in 0..200u64 {
        let nodes = 4 + (seed as usize) % 9;
        let topo = random_topology(nodes, 1000 + seed, GenParams::default());
        let mut n = Network::new(&topo, seed, SimConfig::default()).unwrap();
        n.converge(60_000_000).unwrap();
        let adj = adjacency(&topo);
        for c in n.clusters() {
            let set: BTreeSet<usize> = std::iter::once(c.head)
                .chain(c.members.iter().map(|m| m.node))
                .collect();
            for &s in &set {
                let inside = distances(&adj, s, Some(&set));
                let anywhere = distances(&adj, s, None);
                for &t in &set {
                    if s == t {
                        continue;
                    }
                    let pv = n.resolve_route(s, t).unwrap();
                    assert_eq!(walk(&n, s, &pv).unwrap().last(), Some(&t), "seed {seed}");
                    match inside[t] {
                        Some(d) => {
                            assert_eq!(
                                pv.hop_count(),
                                d,
                                "seed {seed}: {} -> {}",
                                n.name_of(s),
                                n.name_of(t)
                            );
                            checked += 1;
                        }
                        // the cluster is split; the route came from a probe
                        None => {
                            assert!(pv.hop_count() >= anywhere[t].unwrap());
                            split += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
    assert!(split * 20 < checked, "{split} split pairs vs {checked}");
}

#[test]
fn every_pair_resolves_to_a_delivering_route() {
    for seed in 0..20u64 {
        let topo = random_topology(12, 500 + seed, GenParams::default());
        let mut n = Network::new(&topo, seed, SimConfig::default()).unwrap();
        n.converge(60_000_000).unwrap();
        for s in 0..n.node_count() {
            for t in 0..n.node_count() {
                let pv = n.resolve_route(s, t).unwrap();
                assert_eq!(walk(&n, s, &pv).unwrap().last(), Some(&t));
            }
        }
    }
}

#[test]
fn probe_relays_once_per_node() {
    let topo = random_topology(50, 77, GenParams::default());
    let total_nics: u64 = topo
        .links
        .iter()
        .map(|l| l.attachments().len() as u64)
        .sum();
    let mut n = Network::new(&topo, 77, SimConfig::default()).unwrap();
    n.converge(120_000_000).unwrap();
    let heads: Vec<usize> = n.clusters().iter().map(|c| c.head).collect();
    assert!(heads.len() >= 2);
    // a member of the first cluster towards the head of the last
    let clusters = n.clusters();
    let src = clusters[0]
        .members
        .first()
        .map_or(clusters[0].head, |m| m.node);
    let dst = clusters.last().unwrap().head;
    let before: Vec<u64> = n
        .metrics()
        .nodes
        .iter()
        .map(|c| c.sent(MsgType::ProbeReq))
        .collect();
    n.resolve_route(src, dst).unwrap();
    let after: Vec<u64> = n
        .metrics()
        .nodes
        .iter()
        .map(|c| c.sent(MsgType::ProbeReq))
        .collect();
    let per_node: Vec<u64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
    let nics: BTreeMap<usize, u64> = (0..n.node_count())
        .map(|i| (i, n.node(i).nics().len() as u64))
        .collect();
    let sent: u64 = per_node.iter().sum();
    assert!(sent > 0);
    for (i, k) in per_node.iter().enumerate() {
        // one relay per node, one frame per NIC at most
        assert!(*k <= nics[&i], "{} sent {k}", n.name_of(i));
    }
    assert!(sent <= total_nics);
}

#[test]
fn offline_relay_is_routed_around() {
    // a ring: A - B - C - D - A with E hanging off C; B dies
    let topo = pvh::sim::Topology::parse(
        "node A cap 0.9 0.9 0.9\nnode B cap 0.1 0.2 0.1\nnode C cap 0.2 0.1 0.1\nnode D cap 0.1 0.1 0.2\nnode E cap 0.1 0.1 0.1\n\
         link p2p A:1 B:1\nlink p2p B:2 C:1\nlink p2p C:2 D:1\nlink p2p D:2 A:2\nlink p2p C:3 E:1\n",
    )
    .unwrap();
    let mut n = Network::new(&topo, 9, SimConfig::default()).unwrap();
    n.converge(30_000_000).unwrap();
    let (a, b, c) = (0, 1, 2);
    let pv = n.resolve_route(a, c).unwrap();
    let via = walk(&n, a, &pv).unwrap();
    assert_eq!(via.len(), 3);
    let head = n.clusters()[0].head;
    n.set_online(b, false);
    if via[1] == b {
        assert!(n.ping(a, c, 1).is_err());
    }
    let period = n.config().protocol.hello_interval + n.config().protocol.upload_jitter_max;
    n.run_for(3 * period + n.config().protocol.hello_interval);
    assert!(n.node(head).topology().is_offline(n.addr_of(b)));
    n.ping(a, c, 2).unwrap();
    let pv = n.resolve_route(a, c).unwrap();
    assert!(!walk(&n, a, &pv).unwrap().contains(&b));
}
