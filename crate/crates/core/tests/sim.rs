mod common;

use common::load_scenario;
use pvh::sim::{Network, SimConfig, Topology};
use pvh::wire::{encode_control, ControlMessage, MacAddr, NicId, ETHERTYPE_PVH_CONTROL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quiet() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.protocol.clustering = false;
    cfg
}

fn nic(n: u8) -> NicId {
    NicId::new(n).unwrap()
}

fn rx_counts(net: &Network) -> Vec<u64> {
    net.metrics().nodes.iter().map(|c| c.ctrl_rx).collect()
}

#[test]
fn frame_delivery_sets() {
    let topo = Topology::parse(
        "node a cap 0 0 0\nnode b cap 0 0 0\nnode c cap 0 0 0\nnode d cap 0 0 0\n\
         link p2p a:1 b:1\nlink shared lan\nattach lan a:2 b:2 c:1 d:1\n",
    )
    .unwrap();
    let mut net = Network::new(&topo, 5, quiet()).unwrap();
    let hello = encode_control(&ControlMessage::Hello {
        origin: net.addr_of(0),
    })
    .unwrap();

    net.emit_frame(
        0,
        nic(1),
        MacAddr::BROADCAST,
        ETHERTYPE_PVH_CONTROL,
        hello.clone(),
    )
    .unwrap();
    net.run_for(10_000);
    assert_eq!(rx_counts(&net), [0, 1, 0, 0]);

    net.emit_frame(
        0,
        nic(2),
        MacAddr::BROADCAST,
        ETHERTYPE_PVH_CONTROL,
        hello.clone(),
    )
    .unwrap();
    net.run_for(10_000);
    assert_eq!(rx_counts(&net), [0, 2, 1, 1]);

    let c_mac = net.mac_of(2, nic(1)).unwrap();
    net.emit_frame(0, nic(2), c_mac, ETHERTYPE_PVH_CONTROL, hello.clone())
        .unwrap();
    net.run_for(10_000);
    assert_eq!(rx_counts(&net), [0, 2, 2, 1]);

    // unicast to a MAC nobody owns reaches no one
    net.emit_frame(
        0,
        nic(2),
        MacAddr([2, 9, 9, 9, 9, 9]),
        ETHERTYPE_PVH_CONTROL,
        hello.clone(),
    )
    .unwrap();
    net.run_for(10_000);
    assert_eq!(rx_counts(&net), [0, 2, 2, 1]);

    assert!(net
        .emit_frame(0, nic(9), MacAddr::BROADCAST, ETHERTYPE_PVH_CONTROL, hello)
        .is_err());
    assert!(net.ctrl_conserved());
}

#[test]
fn empty_queue_just_advances_the_clock() {
    let mut net = Network::new(&Topology::new(), 1, quiet()).unwrap();
    net.run_until(12_345);
    assert_eq!(net.now(), 12_345);
}

fn line(n: usize, latency: u64) -> Topology {
    let mut text = String::new();
    for i in 0..n {
        text += &format!("node n{i} cap 0.{} 0.5 0.5\n", 9 - i.min(8));
    }
    for i in 1..n {
        text += &format!("link p2p n{}:2 n{i}:1 latency_us {latency}\n", i - 1);
    }
    Topology::parse(&text).unwrap()
}

#[test]
fn steady_rtt_matches_the_event_schedule() {
    for (hops, latency) in [(1usize, 100u64), (3, 100), (3, 250), (5, 40)] {
        let mut net = Network::new(&line(hops + 1, latency), 3, SimConfig::default()).unwrap();
        net.converge(30_000_000).unwrap();
        let p = net.config().protocol.processing;
        let h = hops as u64;
        // out and back over h links, one processing step at every node touched both ways
        let expect = 2 * h * latency + 2 * (h + 1) * p;
        let samples = net.ping(0, hops, 4).unwrap();
        assert_eq!(samples.len(), 4);
        assert!(samples[0].first && samples[0].rtt_us > expect);
        for s in &samples[1..] {
            assert_eq!(s.hops, hops);
            assert_eq!(s.rtt_us, expect, "{hops} hops at {latency} us");
        }
    }
}

#[test]
fn self_ping_is_immediate() {
    let mut net = Network::new(&line(2, 100), 3, SimConfig::default()).unwrap();
    net.converge(30_000_000).unwrap();
    let s = net.ping(1, 1, 2).unwrap();
    assert!(s
        .iter()
        .all(|s| s.hops == 0 && s.rtt_us == 2 * net.config().protocol.processing));
}

#[test]
fn conservation_under_loss_and_churn() {
    let mut text = load_scenario("home19.topo").to_text();
    text = text.replace("link p2p r2:3 r3:1", "link p2p r2:3 r3:1 loss 0.3");
    let topo = Topology::parse(&text).unwrap();
    assert!(topo.links.iter().any(|l| l.loss > 0.0));
    let mut net = Network::new(&topo, 11, SimConfig::default()).unwrap();
    for t in 1..=20u64 {
        net.run_until(t * 700_000);
        assert!(net.ctrl_conserved(), "at {}", net.now());
        if t == 8 {
            net.set_online(net.require("tv").unwrap(), false);
        }
    }
    let m = net.metrics();
    assert!(m.ctrl_lost > 0 && m.ctrl_discarded > 0);
}

#[test]
fn identical_seed_identical_trace() {
    let run = |seed| {
        let mut net =
            Network::new(&load_scenario("home19.topo"), seed, SimConfig::default()).unwrap();
        net.converge(60_000_000).unwrap();
        let rtts: Vec<u64> = net
            .ping(0, 18, 3)
            .unwrap()
            .iter()
            .map(|s| s.rtt_us)
            .collect();
        (net.trace_digest(), net.cluster_report(), rtts)
    };
    assert_eq!(run(42), run(42));
    assert_ne!(run(42).0, run(43).0);
}

fn datagram(rng: &mut ChaCha8Rng, dst: [u8; 4]) -> Vec<u8> {
    let body = rng.gen_range(0..1200);
    let total = 20 + body;
    let mut d = vec![0x45, 0, (total >> 8) as u8, total as u8];
    d.extend_from_slice(&rng.gen::<[u8; 4]>());
    d.extend_from_slice(&[64, rng.gen(), 0, 0, 192, 168, 1, 10]);
    d.extend_from_slice(&dst);
    d.extend((0..body).map(|_| rng.gen::<u8>()));
    d
}

#[test]
fn tunnel_is_transparent_over_many_hops() {
    let mut net = Network::new(&load_scenario("home19.topo"), 42, SimConfig::default()).unwrap();
    net.converge(60_000_000).unwrap();
    let src = net.require("desktop").unwrap();
    let lock = net.require("lock").unwrap();
    assert!(net.resolve_route(src, lock).unwrap().hop_count() >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dst = net.ip_of(lock).unwrap().octets();
    for _ in 0..200 {
        let d = datagram(&mut rng, dst);
        assert_eq!(net.send_ip(src, d.clone()).unwrap(), d);
    }
    let unmapped = datagram(&mut rng, [10, 1, 1, 1]);
    assert!(net.send_ip(src, unmapped).is_err());
}
