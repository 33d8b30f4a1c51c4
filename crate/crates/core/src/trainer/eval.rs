use serde::{Deserialize, Serialize};

use crate::envs::{run_episode, EnvKind, EnvSpec, ILLEGAL_REWARD, SUCCESS_REWARD};
use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::rng::Rng;

/// Per-episode averages of Taxi events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxiTallies {
    pub success: f64,
    pub fail: f64,
    pub steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean: f64,
    pub std: f64,
    pub mean_steps: f64,
    pub taxi: Option<TaxiTallies>,
}

/// Undiscounted returns of `n_episodes` rollouts of a fixed policy.
pub fn evaluate(env: &EnvSpec, policy: &PolicyTable, rng: &mut Rng, n_episodes: usize) -> Result<EvalSummary> {
    policy.check_shape(env.n_states(), env.n_actions())?;
    if n_episodes == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let mut returns = Vec::with_capacity(n_episodes);
    let (mut success, mut fail, mut steps) = (0usize, 0usize, 0usize);
    for _ in 0..n_episodes {
        let t = run_episode(env, policy, rng);
        returns.push(t.total_reward());
        steps += t.len();
        success += t.steps.iter().filter(|s| s.reward == SUCCESS_REWARD).count();
        fail += t.steps.iter().filter(|s| s.reward == ILLEGAL_REWARD).count();
    }
    let n = n_episodes as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mean_steps = steps as f64 / n;
    let taxi = (env.kind == EnvKind::Taxi).then_some(TaxiTallies {
        success: success as f64 / n,
        fail: fail as f64 / n,
        steps: mean_steps,
    });
    Ok(EvalSummary {
        episodes: n_episodes,
        mean,
        std,
        mean_steps,
        taxi,
    })
}
