//! Built-in tabular environments, each available as an exact model and a simulator.

mod chain;
mod cliff;
mod grid_world;
mod rollout;
mod taxi;

use serde::Serialize;

pub use chain::{chain, default_chain};
pub use cliff::cliff_walking;
pub use grid_world::grid_world;
pub use rollout::{rollout, run_episode};
pub use taxi::{taxi, TaxiState, ILLEGAL_REWARD, SUCCESS_REWARD};

use crate::cost::{CostMatrix, CostPreset};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Which built-in family an environment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    GridWorld,
    Chain,
    CliffWalking,
    Taxi,
    Custom,
}

/// An environment: its exact MDP, default action distance and action labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvSpec {
    pub name: String,
    pub kind: EnvKind,
    pub mdp: TabularMdp,
    pub default_cost: CostPreset,
    pub action_names: Vec<String>,
}

impl EnvSpec {
    pub fn custom(name: impl Into<String>, mdp: TabularMdp, default_cost: CostPreset) -> Result<Self> {
        let action_names = (0..mdp.n_actions()).map(|a| format!("a{a}")).collect();
        let spec = Self {
            name: name.into(),
            kind: EnvKind::Custom,
            mdp,
            default_cost,
            action_names,
        };
        spec.cost()?;
        Ok(spec)
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    /// The default cost matrix for this environment's action set.
    pub fn cost(&self) -> Result<CostMatrix> {
        self.default_cost.build(self.n_actions())
    }

    /// Iterations of dual-optimal multipliers before decaying, if tuned for this environment.
    pub fn default_k_beta(&self) -> Option<usize> {
        match self.kind {
            EnvKind::Taxi => Some(250),
            EnvKind::Chain => Some(100),
            EnvKind::CliffWalking => Some(50),
            EnvKind::GridWorld | EnvKind::Custom => None,
        }
    }

    /// Copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Ok(Self {
            mdp: self.mdp.with_gamma(gamma)?,
            ..self.clone()
        })
    }
}

/// Canonical names of the built-in environments.
pub const ENV_NAMES: [&str; 4] = ["grid-world", "chain", "cliff-walking", "taxi"];

/// Looks up a built-in environment by name, with its default parameters.
pub fn by_name(name: &str) -> Result<EnvSpec> {
    match name.to_ascii_lowercase().replace('_', "-").as_str() {
        "grid-world" | "gridworld" => Ok(grid_world()),
        "chain" | "nchain" | "nchain-v0" => Ok(default_chain()),
        "cliff-walking" | "cliffwalking" | "cliffwalking-v0" => Ok(cliff_walking()),
        "taxi" | "taxi-v3" => Ok(taxi()),
        _ => Err(Error::UnknownEnv(name.to_string())),
    }
}

/// All built-in environments with default parameters.
pub fn list() -> Vec<EnvSpec> {
    ENV_NAMES
        .iter()
        .map(|n| by_name(n).expect("built-in name"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_is_consistent() {
        for env in list() {
            assert_eq!(env.action_names.len(), env.n_actions(), "{}", env.name);
            env.cost().unwrap();
            for s in 0..env.n_states() {
                for a in 0..env.n_actions() {
                    let total: f64 = env.mdp.outcomes(s, a).iter().map(|o| o.prob).sum();
                    assert!((total - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn lookup_accepts_aliases() {
        assert_eq!(by_name("Taxi-v3").unwrap().kind, EnvKind::Taxi);
        assert_eq!(by_name("grid_world").unwrap().kind, EnvKind::GridWorld);
        assert!(matches!(by_name("pong"), Err(Error::UnknownEnv(_))));
    }
}
