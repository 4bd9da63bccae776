use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::Micros;
use crate::clustering::Capability;
use crate::wire::{MacAddr, NicId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {what} refers to undeclared {target:?}")]
    DanglingAttachment {
        line: usize,
        what: &'static str,
        target: String,
    },
    #[error("line {line}: {node}:{nic} is attached more than once")]
    DuplicateNic { line: usize, node: String, nic: u8 },
    #[error("line {line}: node {name:?} declared twice")]
    DuplicateNode { line: usize, name: String },
    #[error("line {line}: shared link {name:?} declared twice")]
    DuplicateLink { line: usize, name: String },
    #[error("shared link {0:?} has fewer than two attachments")]
    TooFewAttachments(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub capability: Capability,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Attachment {
    pub node: String,
    pub nic: NicId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinkShape {
    P2p(Attachment, Attachment),
    Shared {
        name: String,
        attachments: Vec<Attachment>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpec {
    pub shape: LinkShape,
    /// `None` takes the simulator's default for the link kind.
    pub latency_us: Option<Micros>,
    pub loss: f64,
}

impl LinkSpec {
    pub fn attachments(&self) -> Vec<&Attachment> {
        match &self.shape {
            LinkShape::P2p(a, b) => vec![a, b],
            LinkShape::Shared { attachments, .. } => attachments.iter().collect(),
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self.shape, LinkShape::Shared { .. })
    }
}

/// Nodes, links and IPv4 mappings of one scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub ipmap: Vec<(Ipv4Addr, String)>,
}

fn perr(line: usize, msg: impl Into<String>) -> TopologyError {
    TopologyError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_attachment(line: usize, tok: &str) -> Result<Attachment, TopologyError> {
    let (node, nic) = tok
        .rsplit_once(':')
        .ok_or_else(|| perr(line, format!("expected <node>:<nic>, got {tok:?}")))?;
    let n: u8 = nic
        .parse()
        .map_err(|_| perr(line, format!("bad nic id {nic:?}")))?;
    let nic = NicId::new(n).ok_or_else(|| perr(line, format!("nic id {n} outside 1..=127")))?;
    if node.is_empty() {
        return Err(perr(line, "empty node name"));
    }
    Ok(Attachment {
        node: node.to_string(),
        nic,
    })
}

fn parse_link_options(line: usize, toks: &[&str]) -> Result<(Option<Micros>, f64), TopologyError> {
    let (mut latency, mut loss) = (None, 0.0);
    let mut it = toks.iter();
    while let Some(key) = it.next() {
        let val = it
            .next()
            .ok_or_else(|| perr(line, format!("{key} needs a value")))?;
        match *key {
            "latency_us" => {
                latency = Some(
                    val.parse()
                        .map_err(|_| perr(line, format!("bad latency {val:?}")))?,
                )
            }
            "loss" => {
                let p: f64 = val
                    .parse()
                    .map_err(|_| perr(line, format!("bad loss {val:?}")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(perr(line, format!("loss {p} outside [0, 1]")));
                }
                loss = p;
            }
            other => return Err(perr(line, format!("unknown link option {other:?}"))),
        }
    }
    Ok((latency, loss))
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the line-oriented topology format.
    pub fn parse(text: &str) -> Result<Topology, TopologyError> {
        let mut topo = Topology::new();
        let mut node_lines: BTreeMap<String, usize> = BTreeMap::new();
        let mut shared: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut refs: Vec<(usize, &'static str, String)> = Vec::new();
        let mut used: BTreeSet<(String, NicId)> = BTreeSet::new();
        let mut attach_at: Vec<(usize, Attachment)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            match toks[0] {
                "node" => {
                    if toks.len() != 6 || toks[2] != "cap" {
                        return Err(perr(line, "expected: node <name> cap <c> <m> <b>"));
                    }
                    let mut v = [0.0; 3];
                    for (k, t) in toks[3..6].iter().enumerate() {
                        v[k] = t
                            .parse()
                            .map_err(|_| perr(line, format!("bad score {t:?}")))?;
                    }
                    let capability =
                        Capability::new(v[0], v[1], v[2]).map_err(|e| perr(line, e.to_string()))?;
                    let name = toks[1].to_string();
                    if node_lines.insert(name.clone(), line).is_some() {
                        return Err(TopologyError::DuplicateNode { line, name });
                    }
                    topo.nodes.push(NodeSpec { name, capability });
                }
                "link" if toks.get(1) == Some(&"p2p") => {
                    if toks.len() < 4 {
                        return Err(perr(
                            line,
                            "expected: link p2p <a>:<nic> <b>:<nic> [options]",
                        ));
                    }
                    let a = parse_attachment(line, toks[2])?;
                    let b = parse_attachment(line, toks[3])?;
                    let (latency_us, loss) = parse_link_options(line, &toks[4..])?;
                    attach_at.push((line, a.clone()));
                    attach_at.push((line, b.clone()));
                    topo.links.push(LinkSpec {
                        shape: LinkShape::P2p(a, b),
                        latency_us,
                        loss,
                    });
                }
                "link" if toks.get(1) == Some(&"shared") => {
                    let name = toks
                        .get(2)
                        .ok_or_else(|| perr(line, "expected: link shared <name> [options]"))?;
                    let (latency_us, loss) = parse_link_options(line, &toks[3..])?;
                    if shared
                        .insert(name.to_string(), (line, topo.links.len()))
                        .is_some()
                    {
                        return Err(TopologyError::DuplicateLink {
                            line,
                            name: name.to_string(),
                        });
                    }
                    topo.links.push(LinkSpec {
                        shape: LinkShape::Shared {
                            name: name.to_string(),
                            attachments: Vec::new(),
                        },
                        latency_us,
                        loss,
                    });
                }
                "link" => return Err(perr(line, "link kind must be p2p or shared")),
                "attach" => {
                    if toks.len() < 3 {
                        return Err(perr(line, "expected: attach <link> <node>:<nic> ..."));
                    }
                    let Some(&(_, idx)) = shared.get(toks[1]) else {
                        return Err(TopologyError::DanglingAttachment {
                            line,
                            what: "attach",
                            target: toks[1].to_string(),
                        });
                    };
                    for t in &toks[2..] {
                        let a = parse_attachment(line, t)?;
                        attach_at.push((line, a.clone()));
                        if let LinkShape::Shared { attachments, .. } = &mut topo.links[idx].shape {
                            attachments.push(a);
                        }
                    }
                }
                "ipmap" => {
                    if toks.len() != 3 {
                        return Err(perr(line, "expected: ipmap <ipv4> <node>"));
                    }
                    let ip: Ipv4Addr = toks[1]
                        .parse()
                        .map_err(|_| perr(line, format!("bad IPv4 address {:?}", toks[1])))?;
                    if topo.ipmap.iter().any(|(i, _)| *i == ip) {
                        return Err(perr(line, format!("{ip} mapped twice")));
                    }
                    refs.push((line, "ipmap", toks[2].to_string()));
                    topo.ipmap.push((ip, toks[2].to_string()));
                }
                other => return Err(perr(line, format!("unknown directive {other:?}"))),
            }
        }

        for (line, a) in attach_at {
            if !node_lines.contains_key(&a.node) {
                return Err(TopologyError::DanglingAttachment {
                    line,
                    what: "attachment",
                    target: a.node,
                });
            }
            if !used.insert((a.node.clone(), a.nic)) {
                return Err(TopologyError::DuplicateNic {
                    line,
                    node: a.node,
                    nic: a.nic.get(),
                });
            }
        }
        for (line, what, target) in refs {
            if !node_lines.contains_key(&target) {
                return Err(TopologyError::DanglingAttachment { line, what, target });
            }
        }
        topo.check_shared()?;
        Ok(topo)
    }

    fn check_shared(&self) -> Result<(), TopologyError> {
        for l in &self.links {
            if let LinkShape::Shared { name, attachments } = &l.shape {
                if attachments.len() < 2 {
                    return Err(TopologyError::TooFewAttachments(name.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn add_node(&mut self, name: &str, capability: Capability) -> usize {
        self.nodes.push(NodeSpec {
            name: name.to_string(),
            capability,
        });
        self.nodes.len() - 1
    }

    pub fn add_p2p(&mut self, a: &str, a_nic: u8, b: &str, b_nic: u8) {
        let at = |n: &str, nic: u8| Attachment {
            node: n.to_string(),
            nic: NicId::new(nic).expect("nic in 1..=127"),
        };
        self.links.push(LinkSpec {
            shape: LinkShape::P2p(at(a, a_nic), at(b, b_nic)),
            latency_us: None,
            loss: 0.0,
        });
    }

    pub fn add_shared(&mut self, name: &str, attachments: &[(&str, u8)]) {
        let attachments = attachments
            .iter()
            .map(|(n, nic)| Attachment {
                node: n.to_string(),
                nic: NicId::new(*nic).expect("nic in 1..=127"),
            })
            .collect();
        self.links.push(LinkSpec {
            shape: LinkShape::Shared {
                name: name.to_string(),
                attachments,
            },
            latency_us: None,
            loss: 0.0,
        });
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Node-level adjacency: two nodes are adjacent when some link joins them.
    pub fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.nodes.len()];
        for l in &self.links {
            let ends: Vec<usize> = l
                .attachments()
                .iter()
                .filter_map(|a| self.node_index(&a.node))
                .collect();
            for &u in &ends {
                for &v in &ends {
                    if u != v {
                        adj[u].insert(v);
                    }
                }
            }
        }
        adj
    }

    /// Hop distance between every pair of nodes; `None` when disconnected.
    pub fn hop_matrix(&self) -> Vec<Vec<Option<usize>>> {
        let adj = self.adjacency();
        (0..self.nodes.len())
            .map(|s| {
                let mut dist = vec![None; adj.len()];
                dist[s] = Some(0);
                let mut q = VecDeque::from([s]);
                while let Some(u) = q.pop_front() {
                    let d = dist[u].unwrap_or(0);
                    for &v in &adj[u] {
                        if dist[v].is_none() {
                            dist[v] = Some(d + 1);
                            q.push_back(v);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.nodes.is_empty() || self.hop_matrix()[0].iter().all(Option::is_some)
    }

    /// Renders back to the text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.nodes {
            let c = n.capability;
            let _ = writeln!(
                s,
                "node {} cap {} {} {}",
                n.name, c.compute, c.memory, c.bandwidth
            );
        }
        let opts = |l: &LinkSpec| {
            let mut o = String::new();
            if let Some(lat) = l.latency_us {
                let _ = write!(o, " latency_us {lat}");
            }
            if l.loss > 0.0 {
                let _ = write!(o, " loss {}", l.loss);
            }
            o
        };
        for l in &self.links {
            match &l.shape {
                LinkShape::P2p(a, b) => {
                    let _ = writeln!(
                        s,
                        "link p2p {}:{} {}:{}{}",
                        a.node,
                        a.nic,
                        b.node,
                        b.nic,
                        opts(l)
                    );
                }
                LinkShape::Shared { name, attachments } => {
                    let _ = writeln!(s, "link shared {name}{}", opts(l));
                    let list: Vec<String> = attachments
                        .iter()
                        .map(|a| format!("{}:{}", a.node, a.nic))
                        .collect();
                    let _ = writeln!(s, "attach {name} {}", list.join(" "));
                }
            }
        }
        for (ip, n) in &self.ipmap {
            let _ = writeln!(s, "ipmap {ip} {n}");
        }
        s
    }
}

/// Locally administered unicast MAC derived from (seed, node name, nic).
pub fn pseudo_mac(seed: u64, name: &str, nic: u8, salt: u32) -> MacAddr {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(name.as_bytes());
    h.update([0, nic]);
    h.update(salt.to_be_bytes());
    let d = h.finalize();
    let mut m = [0u8; 6];
    m.copy_from_slice(&d[..6]);
    m[0] = (m[0] & 0xfe) | 0x02;
    MacAddr(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_one_link() {
        let t = Topology::parse(
            "node a cap 1 1 1\nnode b cap 0 0 0 # leaf\nlink p2p a:1 b:1 latency_us 50\n",
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.links.len(), 1);
        assert_eq!(t.links[0].latency_us, Some(50));
        assert_eq!(Topology::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn shared_link_and_ipmap() {
        let text = "node a cap 1 1 1\nnode b cap 0 0 0\nnode c cap 0.5 0.5 0.5\n\
                    link shared lan loss 0.1\nattach lan a:1 b:1\nattach lan c:2\nipmap 10.0.0.3 c\n";
        let t = Topology::parse(text).unwrap();
        assert_eq!(t.links[0].attachments().len(), 3);
        assert_eq!(t.ipmap, vec![(Ipv4Addr::new(10, 0, 0, 3), "c".to_string())]);
        assert_eq!(Topology::parse(&t.to_text()).unwrap(), t);
        assert_eq!(t.hop_matrix()[0][2], Some(1));
    }

    #[test]
    fn duplicate_nic() {
        let text = "node a cap 1 1 1\nnode b cap 0 0 0\nnode c cap 0 0 0\nlink p2p a:3 b:1\nlink p2p a:3 c:1\n";
        assert_eq!(
            Topology::parse(text),
            Err(TopologyError::DuplicateNic {
                line: 5,
                node: "a".into(),
                nic: 3
            })
        );
    }

    #[test]
    fn dangling_and_parse_errors() {
        assert!(matches!(
            Topology::parse("node a cap 1 1 1\nlink p2p a:1 z:1\n"),
            Err(TopologyError::DanglingAttachment { line: 2, .. })
        ));
        assert!(matches!(
            Topology::parse("node a cap 1 1 1\nattach lan a:1\n"),
            Err(TopologyError::DanglingAttachment { line: 2, .. })
        ));
        assert!(matches!(
            Topology::parse("node a cap 1 1\n"),
            Err(TopologyError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Topology::parse("node a cap 1 1 2\n"),
            Err(TopologyError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Topology::parse("\n\nfrobnicate\n"),
            Err(TopologyError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Topology::parse("node a cap 1 1 1\nnode b cap 1 1 1\nlink shared s\nattach s a:1\n"),
            Err(TopologyError::TooFewAttachments(_))
        ));
        assert!(matches!(
            Topology::parse("node a cap 1 1 1\nnode b cap 1 1 1\nlink p2p a:1 b:1 loss 2\n"),
            Err(TopologyError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn macs_are_local_unicast_and_stable() {
        let m = pseudo_mac(42, "router", 1, 0);
        assert_eq!(m, pseudo_mac(42, "router", 1, 0));
        assert_ne!(m, pseudo_mac(42, "router", 2, 0));
        assert_ne!(m, pseudo_mac(43, "router", 1, 0));
        assert_eq!(m.0[0] & 0x03, 0x02);
    }
}
