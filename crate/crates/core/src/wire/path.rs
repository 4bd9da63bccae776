//! Path vector entries and their one-byte-per-hop wire encoding.
//!
//! A point-to-point hop is the positive NIC id. A shared-medium hop is the
//! negated NIC id followed by the 6-octet destination MAC. A zero byte
//! terminates the vector.

use std::fmt;

use super::{MacAddr, WireError};

/// Largest path vector region that still lets `hdr_len` fit in one octet.
pub const MAX_PV_WIRE_LEN: usize = 239;

/// Largest reverse-path entry region a packet may accumulate.
pub const MAX_REV_PATH_WIRE_LEN: usize = 200;

/// Identifier of a NIC on one node, 1..=127.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NicId(u8);

impl NicId {
    pub const MAX: u8 = 127;

    pub fn new(id: u8) -> Option<NicId> {
        (1..=Self::MAX).contains(&id).then_some(NicId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Debug for NicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nic{}", self.0)
    }
}

impl fmt::Display for NicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathEntry {
    PointToPoint(NicId),
    SharedMedium(NicId, MacAddr),
    Terminator,
}

impl PathEntry {
    pub fn wire_len(&self) -> usize {
        match self {
            PathEntry::SharedMedium(..) => 7,
            _ => 1,
        }
    }

    pub fn nic(&self) -> Option<NicId> {
        match self {
            PathEntry::PointToPoint(nic) | PathEntry::SharedMedium(nic, _) => Some(*nic),
            PathEntry::Terminator => None,
        }
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        match self {
            PathEntry::PointToPoint(nic) => buf.push(nic.get()),
            PathEntry::SharedMedium(nic, dmac) => {
                buf.push((-(nic.get() as i8)) as u8);
                buf.extend_from_slice(&dmac.0);
            }
            PathEntry::Terminator => buf.push(0),
        }
    }

    /// Decodes one entry from the front of `buf`, returning it and its size.
    pub fn decode(buf: &[u8]) -> Result<(PathEntry, usize), WireError> {
        let first = *buf.first().ok_or(WireError::MalformedPathVector)?;
        let signed = first as i8;
        match signed {
            0 => Ok((PathEntry::Terminator, 1)),
            1..=127 => Ok((PathEntry::PointToPoint(NicId(first)), 1)),
            // -128 has no positive counterpart in one octet
            i8::MIN => Err(WireError::MalformedPathVector),
            _ => {
                let nic = NicId((-signed) as u8);
                let dmac: [u8; 6] = buf
                    .get(1..7)
                    .ok_or(WireError::MalformedPathVector)?
                    .try_into()
                    .expect("slice of six");
                Ok((PathEntry::SharedMedium(nic, MacAddr(dmac)), 7))
            }
        }
    }
}

impl fmt::Display for PathEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathEntry::PointToPoint(nic) => write!(f, "{nic}"),
            PathEntry::SharedMedium(nic, dmac) => write!(f, "-{nic}@{dmac}"),
            PathEntry::Terminator => write!(f, "0"),
        }
    }
}

fn encode_hops(hops: &[PathEntry], buf: &mut Vec<u8>) {
    for hop in hops {
        hop.encode_into(buf);
    }
}

/// Source route carried in a PVH header.
///
/// Only the hops are stored; the terminator is implicit, so a `PathVector`
/// always ends in exactly one terminator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PathVector {
    hops: Vec<PathEntry>,
}

impl PathVector {
    /// The zero-hop route: a lone terminator.
    pub fn terminator() -> Self {
        PathVector { hops: Vec::new() }
    }

    pub fn from_hops(hops: Vec<PathEntry>) -> Result<Self, WireError> {
        if hops.contains(&PathEntry::Terminator) {
            return Err(WireError::MalformedPathVector);
        }
        let pv = PathVector { hops };
        if pv.wire_len() > MAX_PV_WIRE_LEN {
            return Err(WireError::PathTooLong(pv.wire_len()));
        }
        Ok(pv)
    }

    /// Builds from a full entry list, which must end in its only terminator.
    pub fn from_entries(mut entries: Vec<PathEntry>) -> Result<Self, WireError> {
        if entries.pop() != Some(PathEntry::Terminator) {
            return Err(WireError::MalformedPathVector);
        }
        Self::from_hops(entries)
    }

    /// Shorthand for an all point-to-point route, e.g. `[2, 2, 3]`.
    pub fn p2p(nics: &[u8]) -> Result<Self, WireError> {
        let hops = nics
            .iter()
            .map(|&n| {
                NicId::new(n)
                    .map(PathEntry::PointToPoint)
                    .ok_or(WireError::BadNic(n))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_hops(hops)
    }

    pub fn hops(&self) -> &[PathEntry] {
        &self.hops
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = PathEntry> + '_ {
        self.hops
            .iter()
            .copied()
            .chain(std::iter::once(PathEntry::Terminator))
    }

    pub fn leading(&self) -> PathEntry {
        self.hops.first().copied().unwrap_or(PathEntry::Terminator)
    }

    /// Wire size including the terminator.
    pub fn wire_len(&self) -> usize {
        self.hops.iter().map(PathEntry::wire_len).sum::<usize>() + 1
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        encode_hops(&self.hops, buf);
        buf.push(0);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.wire_len());
        self.encode_into(&mut buf);
        buf
    }

    /// Decodes entries up to and including the first terminator. Returns the
    /// vector and the number of octets consumed.
    pub fn decode(buf: &[u8]) -> Result<(PathVector, usize), WireError> {
        let mut hops = Vec::new();
        let mut pos = 0;
        loop {
            let (entry, used) = PathEntry::decode(&buf[pos..])?;
            pos += used;
            match entry {
                PathEntry::Terminator => break,
                hop => hops.push(hop),
            }
        }
        Ok((PathVector { hops }, pos))
    }

    /// Removes the leading hop; `None` when the vector is already at its terminator.
    pub(crate) fn pop_front(&mut self) -> Option<PathEntry> {
        if self.hops.is_empty() {
            None
        } else {
            Some(self.hops.remove(0))
        }
    }

    /// Route that follows `self` and then `rest`.
    pub fn concat(&self, rest: &PathVector) -> Result<PathVector, WireError> {
        let mut hops = self.hops.clone();
        hops.extend_from_slice(&rest.hops);
        Self::from_hops(hops)
    }
}

impl fmt::Display for PathVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.entries().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// Receiving-hop record accumulated in transit, oldest hop first. Never
/// contains a terminator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RevPath {
    hops: Vec<PathEntry>,
}

impl RevPath {
    pub fn new() -> Self {
        RevPath { hops: Vec::new() }
    }

    pub fn from_hops(hops: Vec<PathEntry>) -> Result<Self, WireError> {
        if hops.contains(&PathEntry::Terminator) {
            return Err(WireError::MalformedPathVector);
        }
        let rev = RevPath { hops };
        if rev.wire_len() > MAX_REV_PATH_WIRE_LEN {
            return Err(WireError::RevPathTooLong(rev.wire_len()));
        }
        Ok(rev)
    }

    pub fn hops(&self) -> &[PathEntry] {
        &self.hops
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Wire size of the entries alone (no count octet).
    pub fn wire_len(&self) -> usize {
        self.hops.iter().map(PathEntry::wire_len).sum()
    }

    pub(crate) fn push(&mut self, hop: PathEntry) {
        self.hops.push(hop);
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        encode_hops(&self.hops, buf);
    }

    /// Decodes a region holding only entries; a zero byte is an error.
    pub fn decode(buf: &[u8]) -> Result<RevPath, WireError> {
        let mut hops = Vec::new();
        let mut pos = 0;
        while pos < buf.len() {
            let (entry, used) = PathEntry::decode(&buf[pos..])?;
            if entry == PathEntry::Terminator {
                return Err(WireError::MalformedPathVector);
            }
            hops.push(entry);
            pos += used;
        }
        RevPath::from_hops(hops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nic(n: u8) -> NicId {
        NicId::new(n).unwrap()
    }

    #[test]
    fn nic_range() {
        assert!(NicId::new(0).is_none());
        assert!(NicId::new(128).is_none());
        assert_eq!(NicId::new(127).unwrap().get(), 127);
    }

    #[test]
    fn p2p_wire_bytes() {
        let pv = PathVector::p2p(&[2, 2, 3]).unwrap();
        assert_eq!(pv.to_bytes(), vec![2, 2, 3, 0]);
        assert_eq!(pv.to_string(), "[2, 2, 3, 0]");
    }

    #[test]
    fn shared_entry_is_negated_nic_then_mac() {
        let mac = MacAddr([1, 2, 3, 4, 5, 6]);
        let pv = PathVector::from_hops(vec![PathEntry::SharedMedium(nic(3), mac)]).unwrap();
        assert_eq!(pv.to_bytes(), vec![0xfd, 1, 2, 3, 4, 5, 6, 0]);
        assert_eq!(pv.wire_len(), 8);
        let (back, used) = PathVector::decode(&pv.to_bytes()).unwrap();
        assert_eq!(back, pv);
        assert_eq!(used, 8);
    }

    #[test]
    fn decode_rejects_missing_terminator_and_overrun() {
        assert_eq!(
            PathVector::decode(&[2, 3]),
            Err(WireError::MalformedPathVector)
        );
        assert_eq!(
            PathVector::decode(&[0xfd, 1, 2]),
            Err(WireError::MalformedPathVector)
        );
        assert_eq!(
            PathVector::decode(&[0x80, 0]),
            Err(WireError::MalformedPathVector)
        );
        assert_eq!(PathVector::decode(&[]), Err(WireError::MalformedPathVector));
    }

    #[test]
    fn from_entries_requires_single_trailing_terminator() {
        use PathEntry::*;
        assert!(PathVector::from_entries(vec![PointToPoint(nic(1)), Terminator]).is_ok());
        assert!(PathVector::from_entries(vec![PointToPoint(nic(1))]).is_err());
        assert!(
            PathVector::from_entries(vec![Terminator, PointToPoint(nic(1)), Terminator]).is_err()
        );
    }

    #[test]
    fn length_caps() {
        assert!(PathVector::p2p(&[1; 238]).is_ok());
        assert!(matches!(
            PathVector::p2p(&[1; 239]),
            Err(WireError::PathTooLong(240))
        ));
        let hops = vec![PathEntry::PointToPoint(nic(1)); 201];
        assert!(RevPath::from_hops(hops).is_err());
    }

    #[test]
    fn rev_path_decode_rejects_zero() {
        assert!(RevPath::decode(&[3, 0, 2]).is_err());
        assert_eq!(RevPath::decode(&[3, 5]).unwrap().len(), 2);
    }
}
