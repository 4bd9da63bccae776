use std::cmp::Ordering;

use super::ClusterError;
use crate::wire::NodeAddr;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Weights of compute, memory and bandwidth in the capability value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Weights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ClusterError> {
        let w = Weights { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        let parts = [self.alpha, self.beta, self.gamma];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0)
            || ((self.alpha + self.beta + self.gamma) - 1.0).abs() > WEIGHT_SUM_TOLERANCE
        {
            return Err(ClusterError::InvalidWeights(
                self.alpha, self.beta, self.gamma,
            ));
        }
        Ok(())
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
        }
    }
}

/// Normalized compute, memory and bandwidth scores of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capability {
    pub compute: f64,
    pub memory: f64,
    pub bandwidth: f64,
}

impl Capability {
    pub fn new(compute: f64, memory: f64, bandwidth: f64) -> Result<Self, ClusterError> {
        for v in [compute, memory, bandwidth] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ClusterError::ScoreOutOfRange(v));
            }
        }
        Ok(Capability {
            compute,
            memory,
            bandwidth,
        })
    }

    pub fn value(&self, weights: &Weights) -> Result<f64, ClusterError> {
        capability_value(self.compute, self.memory, self.bandwidth, weights)
    }
}

/// `N = αC + βM + γB` with `α + β + γ = 1`.
pub fn capability_value(c: f64, m: f64, b: f64, weights: &Weights) -> Result<f64, ClusterError> {
    weights.validate()?;
    Capability::new(c, m, b)?;
    Ok(weights.alpha * c + weights.beta * m + weights.gamma * b)
}

/// Election key: capability value, ties broken by the larger address.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rank {
    pub value: f64,
    pub addr: NodeAddr,
}

impl Rank {
    pub fn new(value: f64, addr: NodeAddr) -> Self {
        Rank { value, addr }
    }
}

impl Eq for Rank {}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.addr.cmp(&other.addr))
    }
}

/// Whether `own` beats every rank it knows of.
pub fn is_local_maximum(own: Rank, known: impl IntoIterator<Item = Rank>) -> bool {
    known.into_iter().all(|r| r.addr == own.addr || r < own)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_weights() {
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(capability_value(0.8, 0.5, 0.1, &w).unwrap(), 0.8);
    }

    #[test]
    fn all_ones_gives_one() {
        for w in [
            Weights::default(),
            Weights::new(0.2, 0.2, 0.6).unwrap(),
            Weights::new(0.0, 1.0, 0.0).unwrap(),
        ] {
            assert!((capability_value(1.0, 1.0, 1.0, &w).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_sum() {
        let w = Weights::new(0.5, 0.3, 0.2).unwrap();
        let n = capability_value(0.6, 0.4, 0.2, &w).unwrap();
        assert!((n - 0.46).abs() < 1e-12, "{n}");
    }

    #[test]
    fn invalid_weights() {
        assert!(matches!(
            Weights::new(0.5, 0.5, 0.5),
            Err(ClusterError::InvalidWeights(..))
        ));
        let w = Weights {
            alpha: 0.4,
            beta: 0.4,
            gamma: 0.1,
        };
        assert!(capability_value(0.1, 0.1, 0.1, &w).is_err());
        assert!(Weights::new(1.2, -0.2, 0.0).is_err());
    }

    #[test]
    fn score_range() {
        assert!(Capability::new(1.1, 0.0, 0.0).is_err());
        assert!(Capability::new(0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn rank_ties_break_on_address() {
        let lo = NodeAddr([2, 0, 0, 0, 0, 1]);
        let hi = NodeAddr([2, 0, 0, 0, 0, 2]);
        assert!(Rank::new(0.5, hi) > Rank::new(0.5, lo));
        assert!(Rank::new(0.6, lo) > Rank::new(0.5, hi));
        assert!(!is_local_maximum(Rank::new(0.5, lo), [Rank::new(0.5, hi)]));
        assert!(is_local_maximum(Rank::new(0.9, lo), [Rank::new(0.7, hi)]));
        assert!(is_local_maximum(Rank::new(0.1, lo), []));
    }
}
