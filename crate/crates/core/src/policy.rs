//! Tabular stochastic policies.

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::ActionTable;

/// One action distribution per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Distribution>", into = "Vec<Distribution>")]
pub struct PolicyTable {
    rows: Vec<Distribution>,
}

impl PolicyTable {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let n = rows.first().map(Distribution::len).ok_or(Error::EmptyVector)?;
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(
                "policy rows have different action counts".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .map(Distribution::new)
                .collect::<Result<_>>()?,
        )
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            rows: vec![Distribution::uniform(n_actions); n_states],
        }
    }

    /// Each row drawn uniformly from the simplex.
    pub fn random(n_states: usize, n_actions: usize, rng: &mut Rng) -> Self {
        Self {
            rows: (0..n_states)
                .map(|_| Distribution::random(n_actions, rng))
                .collect(),
        }
    }

    /// Deterministic policy picking `actions[s]` at state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        Self {
            rows: actions
                .iter()
                .map(|&a| Distribution::one_hot(n_actions, a))
                .collect(),
        }
    }

    /// One-hot on the lowest-index maximizer of each row of `q`.
    pub fn greedy(q: &ActionTable) -> Self {
        let actions: Vec<usize> = (0..q.n_states())
            .map(|s| {
                let row = q.row(s);
                let mut best = 0;
                for (a, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect();
        Self::deterministic(&actions, q.n_actions())
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, s: usize) -> &Distribution {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.rows[s].get(a)
    }

    pub fn sample(&self, s: usize, rng: &mut Rng) -> usize {
        self.rows[s].sample(rng)
    }

    /// Most likely action per state.
    pub fn modes(&self) -> Vec<usize> {
        self.rows.iter().map(Distribution::argmax).collect()
    }

    pub fn max_abs_diff(&self, other: &PolicyTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.probs().iter().zip(b.probs()))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn check_shape(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.n_states() != n_states || self.n_actions() != n_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}, expected {}x{}",
                self.n_states(),
                self.n_actions(),
                n_states,
                n_actions
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Distribution>> for PolicyTable {
    type Error = Error;

    fn try_from(rows: Vec<Distribution>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<PolicyTable> for Vec<Distribution> {
    fn from(p: PolicyTable) -> Self {
        p.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_breaks_ties_low() {
        let q = ActionTable::from_rows(vec![vec![1.0, 3.0, 3.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let p = PolicyTable::greedy(&q);
        assert_eq!(p.modes(), vec![1, 0]);
        assert_eq!(p.prob(0, 1), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = Rng::new(5);
        let p = PolicyTable::random(3, 4, &mut rng);
        let s = serde_json::to_string(&p).unwrap();
        let back: PolicyTable = serde_json::from_str(&s).unwrap();
        assert!(p.max_abs_diff(&back) < 1e-15);
    }

    #[test]
    fn ragged_policy_rejected() {
        assert!(PolicyTable::from_rows(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    }
}
