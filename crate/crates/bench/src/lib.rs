//! Seeded inputs shared by the Criterion benchmarks in `benches/`.

use ottr_core::dual::DualProblem;
use ottr_core::{ActionTable, CostMatrix, CostPreset, Distribution, PolicyTable, Rng};

/// A dual problem with uniform advantages in `[-1, 1]`, a random policy and normalized weights.
pub fn random_problem(n_states: usize, n_actions: usize, cost: CostPreset, delta: f64, seed: u64) -> DualProblem {
    let mut rng = Rng::new(seed);
    let a = ActionTable::from_fn(n_states, n_actions, |_, _| rng.range(-1.0, 1.0));
    let pi = PolicyTable::random(n_states, n_actions, &mut rng);
    let raw: Vec<f64> = (0..n_states).map(|_| rng.uniform() + 0.1).collect();
    let total: f64 = raw.iter().sum();
    let rho = raw.iter().map(|r| r / total).collect();
    let d = cost.build(n_actions).expect("preset defined for this size");
    DualProblem::new(a, pi, rho, d, delta).expect("valid problem")
}

/// Two random distributions over `n` points and the L1 index distance between them.
pub fn random_marginals(n: usize, seed: u64) -> (Distribution, Distribution, CostMatrix) {
    let mut rng = Rng::new(seed);
    let p = Distribution::random(n, &mut rng);
    let q = Distribution::random(n, &mut rng);
    (p, q, CostPreset::L1Index.build(n).expect("defined for every size"))
}
