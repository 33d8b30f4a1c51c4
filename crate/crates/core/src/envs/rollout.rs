use super::EnvSpec;
use crate::error::Result;
use crate::policy::PolicyTable;
use crate::rng::Rng;
use crate::trajectory::{Step, Trajectory};

/// Step cap for models without an episode limit.
const UNLIMITED_CAP: usize = 100_000;

/// Samples one episode from the initial distribution.
pub fn run_episode(env: &EnvSpec, policy: &PolicyTable, rng: &mut Rng) -> Trajectory {
    let mdp = &env.mdp;
    let limit = mdp.episode_limit().unwrap_or(UNLIMITED_CAP);
    let mut s = mdp.sample_initial(rng);
    let mut steps = Vec::new();
    if mdp.is_terminal(s) {
        return Trajectory {
            steps,
            complete: true,
        };
    }
    for _ in 0..limit {
        let a = policy.sample(s, rng);
        let (next, reward) = mdp.step(s, a, rng);
        let done = mdp.is_terminal(next);
        steps.push(Step {
            state: s,
            action: a,
            reward,
            next_state: next,
            done,
        });
        if done {
            return Trajectory {
                steps,
                complete: true,
            };
        }
        s = next;
    }
    Trajectory {
        steps,
        complete: false,
    }
}

/// Samples `n_episodes` independent episodes.
pub fn rollout(
    env: &EnvSpec,
    policy: &PolicyTable,
    rng: &mut Rng,
    n_episodes: usize,
) -> Result<Vec<Trajectory>> {
    policy.check_shape(env.n_states(), env.n_actions())?;
    Ok((0..n_episodes)
        .map(|_| run_episode(env, policy, rng))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{default_chain, grid_world};
    use crate::error::Error;

    #[test]
    fn always_pickup_ends_immediately() {
        let env = grid_world();
        let policy = PolicyTable::deterministic(&[2; 8], 3);
        let trajs = rollout(&env, &policy, &mut Rng::new(0), 20).unwrap();
        for t in trajs {
            assert_eq!(t.len(), 1);
            assert!(t.complete);
            assert_eq!(t.total_reward(), -3.0);
        }
    }

    #[test]
    fn one_hot_policy_on_deterministic_env_repeats() {
        let env = grid_world();
        let policy = PolicyTable::deterministic(&[0, 0, 0, 1, 1, 1, 1, 2], 3);
        let trajs = rollout(&env, &policy, &mut Rng::new(3), 5).unwrap();
        assert!(trajs.windows(2).all(|w| w[0] == w[1]));
        assert!(!trajs[0].complete);
        assert_eq!(trajs[0].len(), 10);
    }

    #[test]
    fn truncation_at_limit() {
        let env = default_chain();
        let policy = PolicyTable::uniform(5, 2);
        let t = run_episode(&env, &policy, &mut Rng::new(1));
        assert_eq!(t.len(), 1000);
        assert!(!t.complete);
    }

    #[test]
    fn shape_mismatch() {
        let env = grid_world();
        let policy = PolicyTable::uniform(3, 3);
        assert!(matches!(
            rollout(&env, &policy, &mut Rng::new(0), 1),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
