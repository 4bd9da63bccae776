mod common;

use common::load_scenario;
use pvh::clustering::ServiceMode;
use pvh::sim::{sum_sent, Network, SimConfig, Topology};
use pvh::wire::MsgType;

fn network(file: &str, mode: ServiceMode) -> Network {
    let mut cfg = SimConfig::default();
    cfg.protocol.service_mode = mode;
    cfg.protocol.clustering = mode == ServiceMode::Cluster;
    let mut n = Network::new(&load_scenario(file), 42, cfg).unwrap();
    n.converge(60_000_000).unwrap();
    n
}

fn sent(n: &Network, t: MsgType) -> u64 {
    sum_sent(&n.metrics().nodes, &[t])
}

#[test]
fn same_cluster_query_is_two_legs() {
    let mut n = network("fig_forwarding.topo", ServiceMode::Cluster);
    let (a, b) = (n.require("A").unwrap(), n.require("B").unwrap());
    n.register_service(b, "printer").unwrap();
    n.run_for(1_000_000);
    let before = (
        sent(&n, MsgType::SvcQuery),
        sent(&n, MsgType::SvcRep),
        sent(&n, MsgType::ProbeReq),
    );
    let ans = n.query_service(a, "printer").unwrap();
    assert_eq!(ans.provider, Some(b));
    let after = (
        sent(&n, MsgType::SvcQuery),
        sent(&n, MsgType::SvcRep),
        sent(&n, MsgType::ProbeReq),
    );
    // A and the head D are neighbors
    assert_eq!(
        (after.0 - before.0, after.1 - before.1, after.2 - before.2),
        (1, 1, 0)
    );
}

#[test]
fn cluster_query_crosses_clusters_by_probe() {
    let mut n = network("fig_cluster.topo", ServiceMode::Cluster);
    let (a, f) = (n.require("a").unwrap(), n.require("f").unwrap());
    assert_ne!(
        n.node(a).membership().head_addr,
        n.node(f).membership().head_addr
    );
    n.register_service(f, "camera").unwrap();
    n.run_for(1_000_000);
    let probes = sent(&n, MsgType::ProbeReq);
    assert_eq!(n.query_service(a, "camera").unwrap().provider, Some(f));
    assert!(sent(&n, MsgType::ProbeReq) > probes);
}

#[test]
fn push_fills_every_cache() {
    let mut n = network("home19.topo", ServiceMode::Push);
    let nas = n.require("nas").unwrap();
    n.register_service(nas, "media").unwrap();
    n.run_for(1_000_000);
    for i in 0..n.node_count() {
        if i != nas {
            assert_eq!(
                n.node(i).pushed_services().get("media"),
                Some(&n.addr_of(nas)),
                "{}",
                n.name_of(i)
            );
        }
    }
    let q = sent(&n, MsgType::SvcQuery);
    let ans = n
        .query_service(n.require("lock").unwrap(), "media")
        .unwrap();
    assert_eq!(ans.provider, Some(nas));
    assert_eq!(sent(&n, MsgType::SvcQuery), q);
    // keep-alive re-floods
    let pushes = sent(&n, MsgType::SvcPush);
    n.run_for(n.config().protocol.service_keepalive);
    assert!(sent(&n, MsgType::SvcPush) > pushes);
}

#[test]
fn pull_is_one_flood_and_one_reply_path() {
    let mut n = network("home19.topo", ServiceMode::Pull);
    let topo: &Topology = n.topology();
    let total_nics: u64 = topo
        .links
        .iter()
        .map(|l| l.attachments().len() as u64)
        .sum();
    let hm = topo.hop_matrix();
    let (lock, nas) = (n.require("lock").unwrap(), n.require("nas").unwrap());
    n.register_service(nas, "media").unwrap();
    assert_eq!(n.metrics().total_ctrl_tx(), 0);
    let ans = n.query_service(lock, "media").unwrap();
    assert_eq!(ans.provider, Some(nas));
    assert!(sent(&n, MsgType::SvcQuery) <= total_nics);
    // the reply walks the reverse of the first-arriving copy
    assert!(sent(&n, MsgType::SvcRep) >= hm[nas][lock].unwrap() as u64);
    assert!(sent(&n, MsgType::SvcRep) <= 2 * hm[nas][lock].unwrap() as u64);
}

#[test]
fn unknown_name_times_out() {
    for mode in [ServiceMode::Pull, ServiceMode::Cluster, ServiceMode::Push] {
        let mut n = network("fig_forwarding.topo", mode);
        let start = n.now();
        let ans = n.query_service(0, "nothing").unwrap();
        assert_eq!(ans.provider, None, "{mode}");
        if mode != ServiceMode::Push {
            assert!(
                n.now() - start
                    >= n.config()
                        .protocol
                        .query_timeout
                        .min(n.config().protocol.probe_timeout)
            );
        }
    }
    let mut n = network("fig_forwarding.topo", ServiceMode::Cluster);
    assert!(n.register_service(0, "").is_err());
}
