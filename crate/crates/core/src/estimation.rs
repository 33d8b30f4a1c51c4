//! Returns, advantage estimators, tabular critics and visitation frequencies.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::policy::PolicyTable;
use crate::rng::Rng;
use crate::table::ActionTable;
use crate::trajectory::Trajectory;

/// Tabular state-value critic trained toward sampled targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub v: Vec<f64>,
    pub learning_rate: f64,
}

impl ValueTable {
    pub fn zeros(n_states: usize, learning_rate: f64) -> Self {
        Self {
            v: vec![0.0; n_states],
            learning_rate,
        }
    }

    pub fn get(&self, s: usize) -> f64 {
        self.v[s]
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// `v[s] += alpha (G - v[s])` for every `(s, G)` in order.
pub fn update_value(mut v: ValueTable, batch: &[(usize, f64)]) -> ValueTable {
    for &(s, target) in batch {
        v.v[s] += v.learning_rate * (target - v.v[s]);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AdvantageMethod {
    MonteCarlo,
    Ntd { n: usize },
    Gae { lambda_gae: f64 },
}

impl AdvantageMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AdvantageMethod::Ntd { n: 0 } => Err(Error::InvalidConfig("n-step TD needs n >= 1".into())),
            AdvantageMethod::Gae { lambda_gae } if !(0.0..=1.0).contains(&lambda_gae) => {
                Err(Error::InvalidLambda(lambda_gae))
            }
            _ => Ok(()),
        }
    }
}

/// Discounted suffix sums of a complete episode.
pub fn returns(traj: &Trajectory, gamma: f64) -> Result<Vec<f64>> {
    if !traj.complete {
        return Err(Error::IncompleteTrajectory);
    }
    Ok(suffix_returns(traj, gamma, 0.0))
}

fn suffix_returns(traj: &Trajectory, gamma: f64, tail: f64) -> Vec<f64> {
    let mut out = vec![0.0; traj.len()];
    let mut g = tail;
    for (t, step) in traj.steps.iter().enumerate().rev() {
        g = step.reward + gamma * g;
        out[t] = g;
    }
    out
}

/// Value of the state after `t`, or 0 if step `t` entered a terminal state.
fn bootstrap(traj: &Trajectory, v: &ValueTable, t: usize) -> f64 {
    let step = &traj.steps[t];
    if step.done {
        0.0
    } else {
        v.get(step.next_state)
    }
}

/// Returns of an episode, bootstrapped with `V` at the cut-off when it was truncated.
pub fn bootstrapped_returns(traj: &Trajectory, v: &ValueTable, gamma: f64) -> Vec<f64> {
    let tail = match traj.steps.last() {
        Some(_) if !traj.complete => bootstrap(traj, v, traj.len() - 1),
        _ => 0.0,
    };
    suffix_returns(traj, gamma, tail)
}

/// `sum_{k<m} gamma^k r_{t+k} + gamma^m V(s_{t+m})` with `m = min(n, T - t)`; the
/// bootstrap term vanishes when the window ends in a terminal state.
pub fn ntd_returns(traj: &Trajectory, v: &ValueTable, gamma: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let len = traj.len();
    (0..len)
        .map(|t| {
            let end = (t + n).min(len);
            let mut g = bootstrap(traj, v, end - 1);
            for k in (t..end).rev() {
                g = traj.steps[k].reward + gamma * g;
            }
            g
        })
        .collect()
}

/// Generalized advantage estimates `sum_l (gamma lambda)^l delta_{t+l}`.
pub fn gae(traj: &Trajectory, v: &ValueTable, gamma: f64, lambda_gae: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda_gae) {
        return Err(Error::InvalidLambda(lambda_gae));
    }
    let mut out = vec![0.0; traj.len()];
    let mut acc = 0.0;
    for t in (0..traj.len()).rev() {
        let step = &traj.steps[t];
        let delta = step.reward + gamma * bootstrap(traj, v, t) - v.get(step.state);
        acc = delta + gamma * lambda_gae * acc;
        out[t] = acc;
    }
    Ok(out)
}

/// Per-step advantage estimates for one episode.
pub fn step_advantages(traj: &Trajectory, v: &ValueTable, method: AdvantageMethod, gamma: f64) -> Result<Vec<f64>> {
    let baseline = |g: Vec<f64>| -> Vec<f64> {
        g.into_iter()
            .zip(&traj.steps)
            .map(|(g, s)| g - v.get(s.state))
            .collect()
    };
    match method {
        AdvantageMethod::MonteCarlo => Ok(baseline(bootstrapped_returns(traj, v, gamma))),
        AdvantageMethod::Ntd { n } => Ok(baseline(ntd_returns(traj, v, gamma, n))),
        AdvantageMethod::Gae { lambda_gae } => gae(traj, v, gamma, lambda_gae),
    }
}

/// `(state, target)` pairs for the critic: the per-step estimate plus the baseline.
pub fn value_targets(
    trajs: &[Trajectory],
    v: &ValueTable,
    method: AdvantageMethod,
    gamma: f64,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for traj in trajs {
        let adv = step_advantages(traj, v, method, gamma)?;
        out.extend(
            traj.steps
                .iter()
                .zip(adv)
                .map(|(s, a)| (s.state, a + v.get(s.state))),
        );
    }
    Ok(out)
}

/// Sample-average advantage per state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub a_hat: ActionTable,
    /// Visits per pair in the batch.
    pub coverage: Vec<Vec<usize>>,
    pub method: AdvantageMethod,
    /// Samples actually averaged per pair (at most the cap).
    pub n_a: Vec<Vec<usize>>,
}

impl AdvantageEstimate {
    /// Fraction of state-action pairs with at least one visit.
    pub fn coverage_fraction(&self) -> f64 {
        let total: usize = self.coverage.iter().map(Vec::len).sum();
        let seen = self.coverage.iter().flatten().filter(|&&c| c > 0).count();
        if total == 0 {
            0.0
        } else {
            seen as f64 / total as f64
        }
    }
}

/// Averages per-step estimates by `(s, a)`. Unvisited pairs get 0. With `n_a_cap`,
/// at most that many samples per pair are drawn uniformly without replacement.
pub fn estimate_advantage(
    trajs: &[Trajectory],
    v: &ValueTable,
    method: AdvantageMethod,
    gamma: f64,
    n_actions: usize,
    n_a_cap: Option<usize>,
    rng: &mut Rng,
) -> Result<AdvantageEstimate> {
    if trajs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    method.validate()?;
    let n_states = v.len();
    let mut samples = vec![vec![Vec::new(); n_actions]; n_states];
    for traj in trajs {
        for (step, a) in traj.steps.iter().zip(step_advantages(traj, v, method, gamma)?) {
            if step.state >= n_states || step.action >= n_actions {
                return Err(Error::ShapeMismatch(format!(
                    "step ({}, {}) outside a {n_states}x{n_actions} table",
                    step.state, step.action
                )));
            }
            samples[step.state][step.action].push(a);
        }
    }
    let mut a_hat = ActionTable::zeros(n_states, n_actions);
    let mut coverage = vec![vec![0; n_actions]; n_states];
    let mut n_a = vec![vec![0; n_actions]; n_states];
    for (s, row) in samples.iter().enumerate() {
        for (a, xs) in row.iter().enumerate() {
            coverage[s][a] = xs.len();
            if xs.is_empty() {
                continue;
            }
            let mean = match n_a_cap {
                Some(cap) if xs.len() > cap => {
                    let picked = rng.subsample(xs.len(), cap);
                    n_a[s][a] = picked.len();
                    picked.iter().map(|&i| xs[i]).sum::<f64>() / picked.len().max(1) as f64
                }
                _ => {
                    n_a[s][a] = xs.len();
                    xs.iter().sum::<f64>() / xs.len() as f64
                }
            };
            a_hat.set(s, a, mean);
        }
    }
    Ok(AdvantageEstimate {
        a_hat,
        coverage,
        method,
        n_a,
    })
}

/// `rho(s_t) += gamma^t / |D|` over every step of every episode.
pub fn empirical_visitation(trajs: &[Trajectory], gamma: f64, n_states: usize) -> Result<Vec<f64>> {
    if trajs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut rho = vec![0.0; n_states];
    let scale = 1.0 / trajs.len() as f64;
    for traj in trajs {
        let mut w = scale;
        for step in &traj.steps {
            rho[step.state] += w;
            w *= gamma;
        }
    }
    Ok(rho)
}

/// State transition matrix `P_pi[s][s']` under a policy.
pub fn policy_transition(mdp: &TabularMdp, policy: &PolicyTable) -> Result<DMatrix<f64>> {
    policy.check_shape(mdp.n_states(), mdp.n_actions())?;
    let n = mdp.n_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for o in mdp.outcomes(s, a) {
                p[(s, o.next)] += pa * o.prob;
            }
        }
    }
    Ok(p)
}

/// Unnormalized discounted visitation, solving `rho = upsilon + gamma P_pi^T rho` over
/// nonterminal states. Episodes end on reaching a terminal state, so terminal states get no
/// weight, as in `empirical_visitation`.
pub fn exact_visitation(mdp: &TabularMdp, policy: &PolicyTable) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    let mut p = policy_transition(mdp, policy)?;
    let mut upsilon = DVector::from_column_slice(mdp.initial_dist().probs());
    for s in (0..n).filter(|&s| mdp.is_terminal(s)) {
        p.row_mut(s).fill(0.0);
        p.column_mut(s).fill(0.0);
        upsilon[s] = 0.0;
    }
    let system = DMatrix::identity(n, n) - p.transpose() * mdp.gamma();
    let rho = system.clone().lu().solve(&upsilon).ok_or(Error::SingularSystem)?;
    let residual = (&system * &rho - &upsilon).amax();
    debug_assert!(residual <= 1e-10 * rho.amax().max(1.0), "visitation residual {residual}");
    Ok(rho.iter().copied().collect())
}
