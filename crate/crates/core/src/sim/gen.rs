use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topology::Topology;
use crate::clustering::Capability;

/// Shape of a generated topology.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    /// Extra point-to-point links beyond the spanning tree, per node.
    pub extra_links_per_node: f64,
    /// Chance that a node hosts a shared segment joining it with 2 or 3 others.
    pub shared_fraction: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            extra_links_per_node: 0.4,
            shared_fraction: 0.1,
        }
    }
}

fn score(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.gen_range(0..=1000u32)) / 1000.0
}

/// A connected random topology: a random spanning tree plus extra links
/// and a few shared segments. Node names are `n0`, `n1`, ...
pub fn random_topology(nodes: usize, seed: u64, params: GenParams) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topo = Topology::new();
    let names: Vec<String> = (0..nodes).map(|i| format!("n{i}")).collect();
    for name in &names {
        let cap = Capability::new(score(&mut rng), score(&mut rng), score(&mut rng))
            .expect("scores in range");
        topo.add_node(name, cap);
    }
    let mut next_nic = vec![1u8; nodes];
    let mut adjacent: BTreeSet<(usize, usize)> = BTreeSet::new();
    let p2p = |topo: &mut Topology, next_nic: &mut [u8], a: usize, b: usize| {
        topo.add_p2p(&names[a], next_nic[a], &names[b], next_nic[b]);
        next_nic[a] += 1;
        next_nic[b] += 1;
    };

    for i in 1..nodes {
        let j = rng.gen_range(0..i);
        p2p(&mut topo, &mut next_nic, i, j);
        adjacent.insert((j, i));
    }
    let extra = (nodes as f64 * params.extra_links_per_node).round() as usize;
    for _ in 0..extra {
        if nodes < 3 {
            break;
        }
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        let key = (a.min(b), a.max(b));
        if a == b || adjacent.contains(&key) || next_nic[a] > 100 || next_nic[b] > 100 {
            continue;
        }
        adjacent.insert(key);
        p2p(&mut topo, &mut next_nic, a, b);
    }
    if nodes >= 3 {
        let mut order: Vec<usize> = (0..nodes).collect();
        for hub in 0..nodes {
            if !rng.gen_bool(params.shared_fraction.clamp(0.0, 1.0)) {
                continue;
            }
            order.shuffle(&mut rng);
            let k = rng.gen_range(2..=3);
            let mut members = vec![hub];
            members.extend(order.iter().copied().filter(|&n| n != hub).take(k));
            let attachments: Vec<(String, u8)> = members
                .iter()
                .map(|&n| {
                    let nic = next_nic[n];
                    next_nic[n] += 1;
                    (names[n].clone(), nic)
                })
                .collect();
            let refs: Vec<(&str, u8)> = attachments.iter().map(|(n, i)| (n.as_str(), *i)).collect();
            topo.add_shared(&format!("s{hub}"), &refs);
        }
    }
    topo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_topologies_are_connected_and_reparse() {
        for seed in 0..20 {
            let t = random_topology(3 + seed as usize, seed, GenParams::default());
            assert!(t.is_connected());
            assert_eq!(Topology::parse(&t.to_text()).unwrap(), t);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = random_topology(12, 7, GenParams::default());
        assert_eq!(a, random_topology(12, 7, GenParams::default()));
        assert_ne!(a, random_topology(12, 8, GenParams::default()));
    }
}
