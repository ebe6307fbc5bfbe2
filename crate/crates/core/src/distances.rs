//! Classical distances between distributions on a finite outcome space.
//!
//! Outcomes are opaque `u64` keys. Two distributions can only be compared
//! when they are defined over exactly the same key set; there is no implicit
//! zero padding.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-10;

/// Probability weights over a sorted set of unique keys.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    keys: Vec<u64>,
    weights: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(mut entries: Vec<(u64, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidProbability("duplicate outcome key".into()));
        }
        let (keys, weights) = entries.into_iter().unzip();
        Self::from_parts(keys, weights)
    }

    /// Weights indexed by position: key `i` carries `weights[i]`.
    pub fn from_dense(weights: Vec<f64>) -> Result<Self> {
        let keys = (0..weights.len() as u64).collect();
        Self::from_parts(keys, weights)
    }

    fn from_parts(keys: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("distribution weights"));
        }
        if let Some(w) = weights.iter().find(|&&w| w < 0.0) {
            return Err(Error::InvalidProbability(format!("negative weight {w}")));
        }
        let sum = kahan_sum(weights.iter().copied());
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbability(format!("weights sum to {sum}")));
        }
        Ok(Self { keys, weights })
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, key: u64) -> Option<f64> {
        self.keys.binary_search(&key).ok().map(|i| self.weights[i])
    }

    /// Expectation of `f(key)`.
    pub fn expectation(&self, mut f: impl FnMut(u64) -> f64) -> f64 {
        kahan_sum(self.keys.iter().zip(&self.weights).map(|(&k, &w)| w * f(k)))
    }

    fn paired<'a>(&'a self, other: &'a Self) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
        if self.keys != other.keys {
            return Err(Error::KeyMismatch);
        }
        Ok(self.weights.iter().copied().zip(other.weights.iter().copied()))
    }
}

/// Compensated summation.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Total variation distance `1/2 sum |p - q|`.
pub fn tvd(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    let s = kahan_sum(p.paired(q)?.map(|(a, b)| (a - b).abs()));
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// Bhattacharyya coefficient `sum sqrt(p q)`.
pub fn bhattacharyya(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    let s = kahan_sum(p.paired(q)?.map(|(a, b)| (a * b).sqrt()));
    Ok(s.clamp(0.0, 1.0))
}

/// Squared Hellinger distance `1/2 sum (sqrt p - sqrt q)^2`, evaluated
/// directly. Equals `1 - bhattacharyya(p, q)` but keeps full relative
/// precision when the two distributions are close.
pub fn hellinger_sq(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    let s = kahan_sum(p.paired(q)?.map(|(a, b)| {
        let d = a.sqrt() - b.sqrt();
        d * d
    }));
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// Fisher–Rao geodesic angle `arccos(Bhat)`, computed as
/// `2 asin(sqrt(Hel^2 / 2))` so that nearly identical inputs give an angle
/// near zero instead of roundoff-dominated noise.
pub fn bhattacharyya_angle(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    let h = hellinger_sq(p, q)?;
    Ok(2.0 * (0.5 * h).sqrt().min(1.0).asin())
}
