use std::fmt;
use std::str::FromStr;

use super::WireError;

fn fmt_octets(octets: &[u8; 6], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(
        f,
        "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
        octets[0], octets[1], octets[2], octets[3], octets[4], octets[5]
    )
}

fn parse_octets(s: &str) -> Result<[u8; 6], WireError> {
    let mut out = [0u8; 6];
    let mut parts = s.split(':');
    for slot in out.iter_mut() {
        let part = parts
            .next()
            .ok_or_else(|| WireError::BadAddress(s.to_string()))?;
        if part.len() != 2 {
            return Err(WireError::BadAddress(s.to_string()));
        }
        *slot = u8::from_str_radix(part, 16).map_err(|_| WireError::BadAddress(s.to_string()))?;
    }
    if parts.next().is_some() {
        return Err(WireError::BadAddress(s.to_string()));
    }
    Ok(out)
}

/// Link-layer MAC address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub const BROADCAST: MacAddr = MacAddr([0xff; 6]);

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_octets(&self.0, f)
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MacAddr({self})")
    }
}

impl FromStr for MacAddr {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_octets(s).map(MacAddr)
    }
}

/// 48-bit network-layer host address.
///
/// A host uses the MAC of its first non-loopback NIC, so addresses need no
/// separate assignment protocol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeAddr(pub [u8; 6]);

impl NodeAddr {
    pub const BROADCAST: NodeAddr = NodeAddr([0xff; 6]);

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }
}

impl From<MacAddr> for NodeAddr {
    fn from(mac: MacAddr) -> Self {
        NodeAddr(mac.0)
    }
}

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_octets(&self.0, f)
    }
}

impl fmt::Debug for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeAddr({self})")
    }
}

impl FromStr for NodeAddr {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_octets(s).map(NodeAddr)
    }
}
