use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::ClusterError;
use crate::sim::Micros;
use crate::wire::control::MAX_SERVICE_NAME_LEN;
use crate::wire::NodeAddr;

/// How services are published and found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ServiceMode {
    /// Registered with the cluster head, resolved through it.
    #[default]
    Cluster,
    /// Flooded by the provider and re-flooded as keep-alive.
    Push,
    /// Kept locally; queries are flooded and answered by the provider.
    Pull,
}

impl fmt::Display for ServiceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServiceMode::Cluster => "cluster",
            ServiceMode::Push => "push",
            ServiceMode::Pull => "pull",
        })
    }
}

impl FromStr for ServiceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cluster" => Ok(ServiceMode::Cluster),
            "push" => Ok(ServiceMode::Push),
            "pull" => Ok(ServiceMode::Pull),
            other => Err(format!(
                "unknown service mode {other:?} (expected cluster, push or pull)"
            )),
        }
    }
}

pub fn validate_service_name(name: &str) -> Result<(), ClusterError> {
    if name.is_empty() || name.len() > MAX_SERVICE_NAME_LEN {
        return Err(ClusterError::InvalidServiceName(name.to_string()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceRecord {
    pub name: String,
    pub provider: NodeAddr,
    pub registered_at: Micros,
}

/// Service name to providers. A name appears at most once per provider;
/// registering again refreshes the timestamp.
#[derive(Clone, Debug, Default)]
pub struct ServiceRegistry {
    by_name: BTreeMap<String, BTreeMap<NodeAddr, Micros>>,
}

impl ServiceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        name: &str,
        provider: NodeAddr,
        now: Micros,
    ) -> Result<(), ClusterError> {
        validate_service_name(name)?;
        self.by_name
            .entry(name.to_string())
            .or_default()
            .insert(provider, now);
        Ok(())
    }

    /// Provider with the smallest address, for determinism.
    pub fn lookup(&self, name: &str) -> Option<ServiceRecord> {
        let providers = self.by_name.get(name)?;
        let (provider, at) = providers.iter().next()?;
        Some(ServiceRecord {
            name: name.to_string(),
            provider: *provider,
            registered_at: *at,
        })
    }

    /// Drops records older than `max_age`.
    pub fn expire(&mut self, now: Micros, max_age: Micros) {
        for providers in self.by_name.values_mut() {
            providers.retain(|_, at| now.saturating_sub(*at) <= max_age);
        }
        self.by_name.retain(|_, p| !p.is_empty());
    }

    pub fn remove_provider(&mut self, provider: NodeAddr) {
        for providers in self.by_name.values_mut() {
            providers.remove(&provider);
        }
        self.by_name.retain(|_, p| !p.is_empty());
    }

    pub fn len(&self) -> usize {
        self.by_name.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_is_unique_per_provider() {
        let p = NodeAddr([2, 0, 0, 0, 0, 1]);
        let q = NodeAddr([2, 0, 0, 0, 0, 2]);
        let mut r = ServiceRegistry::new();
        r.register("printer", q, 5).unwrap();
        r.register("printer", p, 1).unwrap();
        r.register("printer", p, 7).unwrap();
        assert_eq!(r.len(), 2);
        let rec = r.lookup("printer").unwrap();
        assert_eq!(rec.provider, p);
        assert_eq!(rec.registered_at, 7);
        assert!(r.lookup("camera").is_none());
        r.remove_provider(p);
        assert_eq!(r.lookup("printer").unwrap().provider, q);
    }

    #[test]
    fn names_are_bounded() {
        let p = NodeAddr([2, 0, 0, 0, 0, 1]);
        let mut r = ServiceRegistry::new();
        assert!(r.register("", p, 0).is_err());
        assert!(r.register(&"a".repeat(65), p, 0).is_err());
        assert!(r.register(&"a".repeat(64), p, 0).is_ok());
    }

    #[test]
    fn expiry() {
        let p = NodeAddr([2, 0, 0, 0, 0, 1]);
        let mut r = ServiceRegistry::new();
        r.register("a", p, 0).unwrap();
        r.register("b", p, 100).unwrap();
        r.expire(150, 60);
        assert!(r.lookup("a").is_none());
        assert!(r.lookup("b").is_some());
    }

    #[test]
    fn mode_parse() {
        assert_eq!("push".parse::<ServiceMode>().unwrap(), ServiceMode::Push);
        assert!("gossip".parse::<ServiceMode>().is_err());
        assert_eq!(ServiceMode::Pull.to_string(), "pull");
    }
}
