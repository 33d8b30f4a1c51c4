//! Probability vectors over a finite set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Sum tolerance every distribution satisfies after construction.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Entries in `[-NEGATIVE_DUST, 0)` are rounding noise and get clamped to zero.
pub const NEGATIVE_DUST: f64 = 1e-12;

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Clamps negative dust and renormalizes `raw` to sum one.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyVector);
        }
        let mut probs = raw;
        for (index, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite("distribution"));
            }
            if *p < -NEGATIVE_DUST {
                return Err(Error::NegativeMass { index, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        if (total - 1.0).abs() > f64::EPSILON {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty set");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        assert!(index < n);
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self { probs }
    }

    /// A point drawn uniformly from the simplex (flat Dirichlet).
    pub fn random(n: usize, rng: &mut Rng) -> Self {
        let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        Self::new(raw).expect("exponential draws have positive mass")
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Inverse-CDF sampling.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        sample_index(&self.probs, rng.uniform())
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// KL(self ‖ other); infinite when `self` puts mass where `other` has none.
    pub fn kl(&self, other: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &q)| if q > 0.0 { p * (p / q).ln() } else { f64::INFINITY })
            .sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Picks the first index whose cumulative weight exceeds `u`.
pub(crate) fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if raw.is_empty() {
            return Err(Error::EmptyVector);
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidMdp(format!(
                "probability vector sums to {total}, expected 1"
            )));
        }
        Self::new(raw)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}
