use ottr_core::analysis::policy_evaluation;
use ottr_core::envs::{self, run_episode};
use ottr_core::estimation::{empirical_visitation, exact_visitation};
use ottr_core::{PolicyTable, Rng, Trajectory};

const EPISODES: usize = 10_000;

#[test]
fn sampled_returns_match_exact_values() {
    for env in envs::list() {
        let gamma = env.mdp.gamma();
        let mut rng = Rng::new(17);
        let policy = PolicyTable::random(env.n_states(), env.n_actions(), &mut rng);
        let exact = policy_evaluation(&env.mdp, &policy).unwrap().j;
        let returns: Vec<f64> = (0..EPISODES)
            .map(|_| run_episode(&env, &policy, &mut rng).discounted_return(gamma))
            .collect();
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let sd = (returns.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * sd / n.sqrt() + 1e-9,
            "{}: sampled {mean} vs exact {exact} (sd {sd})",
            env.name
        );
    }
}

#[test]
fn empirical_visitation_approaches_exact() {
    let env = envs::grid_world();
    let gamma = env.mdp.gamma();
    let policy = PolicyTable::uniform(env.n_states(), env.n_actions());
    let exact = exact_visitation(&env.mdp, &policy).unwrap();
    let mut rng = Rng::new(5);
    let mut errors = Vec::new();
    for n in [100, 1_000, 10_000] {
        let trajs: Vec<Trajectory> = (0..n).map(|_| run_episode(&env, &policy, &mut rng)).collect();
        let est = empirical_visitation(&trajs, gamma, env.n_states()).unwrap();
        errors.push(est.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>());
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 0.05, "{errors:?}");
}
