//! Finite discounted MDPs.

use serde::{Deserialize, Serialize};

use crate::distribution::{sample_index, Distribution};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::table::ActionTable;

const ROW_TOLERANCE: f64 = 1e-9;

/// One possible successor of a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

impl Outcome {
    pub fn new(next: usize, prob: f64, reward: f64) -> Self {
        Self { next, prob, reward }
    }
}

/// Tabular MDP with sparse transitions. Terminal states are absorbing and reward-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpRepr", into = "MdpRepr")]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    reward: ActionTable,
    gamma: f64,
    initial_dist: Distribution,
    episode_limit: Option<usize>,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// `outcomes[s * n_actions + a]` lists the successors of `(s, a)`; repeated successors
    /// are merged with a probability-weighted reward.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        gamma: f64,
        initial_dist: Distribution,
        episode_limit: Option<usize>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("empty state or action set".into()));
        }
        if outcomes.len() != n_states * n_actions {
            return Err(Error::InvalidMdp(format!(
                "expected {} state-action rows, found {}",
                n_states * n_actions,
                outcomes.len()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidMdp(format!("gamma {gamma} outside (0, 1)")));
        }
        if initial_dist.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                found: initial_dist.len(),
            });
        }
        if terminal.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                found: terminal.len(),
            });
        }
        let mut merged_rows = Vec::with_capacity(outcomes.len());
        let mut reward = ActionTable::zeros(n_states, n_actions);
        for (k, row) in outcomes.into_iter().enumerate() {
            let (s, a) = (k / n_actions, k % n_actions);
            let mut merged: Vec<Outcome> = Vec::with_capacity(row.len());
            for o in row {
                if o.next >= n_states {
                    return Err(Error::InvalidMdp(format!(
                        "successor {} of ({s}, {a}) out of range",
                        o.next
                    )));
                }
                if !o.prob.is_finite() || !o.reward.is_finite() || o.prob < 0.0 {
                    return Err(Error::InvalidMdp(format!("bad outcome at ({s}, {a})")));
                }
                if o.prob == 0.0 {
                    continue;
                }
                match merged.iter_mut().find(|m| m.next == o.next) {
                    Some(m) => {
                        let p = m.prob + o.prob;
                        m.reward = (m.prob * m.reward + o.prob * o.reward) / p;
                        m.prob = p;
                    }
                    None => merged.push(o),
                }
            }
            merged.sort_by_key(|o| o.next);
            let total: f64 = merged.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidMdp(format!(
                    "transition row ({s}, {a}) sums to {total}"
                )));
            }
            merged.iter_mut().for_each(|o| o.prob /= total);
            reward.set(s, a, merged.iter().map(|o| o.prob * o.reward).sum());
            merged_rows.push(merged);
        }
        for (s, _) in terminal.iter().enumerate().filter(|(_, &t)| t) {
            for a in 0..n_actions {
                let row = &merged_rows[s * n_actions + a];
                if row.len() != 1 || row[0].next != s || row[0].reward != 0.0 {
                    return Err(Error::InvalidMdp(format!(
                        "terminal state {s} must be absorbing with zero reward"
                    )));
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            outcomes: merged_rows,
            reward,
            gamma,
            initial_dist,
            episode_limit,
            terminal,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidMdp(format!("gamma {gamma} outside (0, 1)")));
        }
        Ok(Self {
            gamma,
            ..self.clone()
        })
    }

    pub fn with_initial_dist(&self, initial_dist: Distribution) -> Result<Self> {
        if initial_dist.len() != self.n_states {
            return Err(Error::DimensionMismatch {
                expected: self.n_states,
                found: initial_dist.len(),
            });
        }
        Ok(Self {
            initial_dist,
            ..self.clone()
        })
    }

    pub fn initial_dist(&self) -> &Distribution {
        &self.initial_dist
    }

    pub fn episode_limit(&self) -> Option<usize> {
        self.episode_limit
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal(&self) -> &[bool] {
        &self.terminal
    }

    /// Successors of `(s, a)` sorted by state index.
    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.n_actions + a]
    }

    /// Expected immediate reward r(s, a).
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward.get(s, a)
    }

    pub fn rewards(&self) -> &ActionTable {
        &self.reward
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.prob)
    }

    pub fn sample_initial(&self, rng: &mut Rng) -> usize {
        self.initial_dist.sample(rng)
    }

    /// Samples a successor and its reward.
    pub fn step(&self, s: usize, a: usize, rng: &mut Rng) -> (usize, f64) {
        let row = self.outcomes(s, a);
        if row.len() == 1 {
            return (row[0].next, row[0].reward);
        }
        let u = rng.uniform();
        let probs: Vec<f64> = row.iter().map(|o| o.prob).collect();
        let o = row[sample_index(&probs, u)];
        (o.next, o.reward)
    }

    /// Dense S×A×S transition tensor.
    pub fn dense_transition(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| {
                (0..self.n_actions)
                    .map(|a| {
                        let mut row = vec![0.0; self.n_states];
                        for o in self.outcomes(s, a) {
                            row[o.next] = o.prob;
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    }

    /// True when some successor reward differs from the expected reward of its pair.
    fn has_transition_rewards(&self) -> bool {
        (0..self.n_states * self.n_actions).any(|k| {
            let r = self.reward.as_slice()[k];
            self.outcomes[k].iter().any(|o| o.reward != r)
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MdpRepr {
    n_states: usize,
    n_actions: usize,
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    gamma: f64,
    initial_dist: Distribution,
    episode_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terminal: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition_reward: Option<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<MdpRepr> for TabularMdp {
    type Error = Error;

    fn try_from(r: MdpRepr) -> Result<Self> {
        let (ns, na) = (r.n_states, r.n_actions);
        let bad = |what: &str| Error::InvalidMdp(format!("{what} has the wrong shape"));
        if r.transition.len() != ns || r.transition.iter().any(|x| x.len() != na) {
            return Err(bad("transition"));
        }
        if r.reward.len() != ns || r.reward.iter().any(|x| x.len() != na) {
            return Err(bad("reward"));
        }
        if let Some(tr) = &r.transition_reward {
            if tr.len() != ns || tr.iter().any(|x| x.len() != na || x.iter().any(|y| y.len() != ns))
            {
                return Err(bad("transition_reward"));
            }
        }
        let mut outcomes = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                let row = &r.transition[s][a];
                if row.len() != ns {
                    return Err(bad("transition"));
                }
                outcomes.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(next, &p)| {
                            let reward = match &r.transition_reward {
                                Some(tr) => tr[s][a][next],
                                None => r.reward[s][a],
                            };
                            Outcome::new(next, p, reward)
                        })
                        .collect(),
                );
            }
        }
        let terminal = r.terminal.unwrap_or_else(|| vec![false; ns]);
        let mdp = TabularMdp::new(ns, na, outcomes, r.gamma, r.initial_dist, r.episode_limit, terminal)?;
        if r.transition_reward.is_some() {
            for s in 0..ns {
                for a in 0..na {
                    if (mdp.reward(s, a) - r.reward[s][a]).abs() > 1e-9 * (1.0 + r.reward[s][a].abs()) {
                        return Err(Error::InvalidMdp(format!(
                            "reward ({s}, {a}) disagrees with transition_reward"
                        )));
                    }
                }
            }
        }
        Ok(mdp)
    }
}

impl From<TabularMdp> for MdpRepr {
    fn from(m: TabularMdp) -> Self {
        let transition_reward = m.has_transition_rewards().then(|| {
            (0..m.n_states)
                .map(|s| {
                    (0..m.n_actions)
                        .map(|a| {
                            let mut row = vec![0.0; m.n_states];
                            for o in m.outcomes(s, a) {
                                row[o.next] = o.reward;
                            }
                            row
                        })
                        .collect()
                })
                .collect()
        });
        let terminal = m.terminal.iter().any(|&t| t).then(|| m.terminal.clone());
        Self {
            n_states: m.n_states,
            n_actions: m.n_actions,
            transition: m.dense_transition(),
            reward: m.reward.rows(),
            gamma: m.gamma,
            initial_dist: m.initial_dist,
            episode_limit: m.episode_limit,
            terminal,
            transition_reward,
        }
    }
}
