use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::policy_transition;
use crate::mdp::TabularMdp;
use crate::policy::PolicyTable;
use crate::table::ActionTable;

const POLISH_ROUNDS: usize = 100;

/// Exact values of a fixed policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValues {
    pub v: Vec<f64>,
    pub q: ActionTable,
    pub a: ActionTable,
    /// `sum_s upsilon(s) V(s)`.
    pub j: f64,
}

fn q_from_v(mdp: &TabularMdp, v: &[f64]) -> ActionTable {
    ActionTable::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        let next: f64 = mdp.outcomes(s, a).iter().map(|o| o.prob * v[o.next]).sum();
        mdp.reward(s, a) + mdp.gamma() * next
    })
}

/// Solves `(I - gamma P_pi) V = r_pi` directly.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &PolicyTable) -> Result<PolicyValues> {
    let n = mdp.n_states();
    let p = policy_transition(mdp, policy)?;
    let r = DVector::from_iterator(
        n,
        (0..n).map(|s| (0..mdp.n_actions()).map(|a| policy.prob(s, a) * mdp.reward(s, a)).sum()),
    );
    let system = DMatrix::identity(n, n) - p * mdp.gamma();
    let v = system.lu().solve(&r).ok_or(Error::SingularSystem)?;
    let v: Vec<f64> = v.iter().copied().collect();
    let q = q_from_v(mdp, &v);
    let a = ActionTable::from_fn(n, mdp.n_actions(), |s, a| q.get(s, a) - v[s]);
    let j = mdp.initial_dist().probs().iter().zip(&v).map(|(u, v)| u * v).sum();
    Ok(PolicyValues { v, q, a, j })
}

/// `A^pi` of a policy.
pub fn exact_advantage(mdp: &TabularMdp, policy: &PolicyTable) -> Result<ActionTable> {
    Ok(policy_evaluation(mdp, policy)?.a)
}

/// Optimal values and a greedy optimal policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub v_star: Vec<f64>,
    pub q_star: ActionTable,
    pub pi_star: PolicyTable,
    /// `||T V* - V*||_inf` at the returned values.
    pub residual: f64,
}

fn bellman_residual(mdp: &TabularMdp, v: &[f64]) -> (ActionTable, f64) {
    let q = q_from_v(mdp, v);
    let residual = (0..mdp.n_states())
        .map(|s| {
            let best = q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - v[s]).abs()
        })
        .fold(0.0, f64::max);
    (q, residual)
}

/// Value iteration until `||TV - V|| <= tol (1 - gamma) / gamma`, then policy-iteration
/// rounds with exact evaluation so that `V*` is exact up to rounding.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ExactSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance {tol} must be positive")));
    }
    let gamma = mdp.gamma();
    let stop = tol * (1.0 - gamma) / gamma;
    let mut v = vec![0.0; mdp.n_states()];
    loop {
        let (q, residual) = bellman_residual(mdp, &v);
        v = (0..mdp.n_states())
            .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        if residual <= stop {
            break;
        }
    }
    let mut pi = PolicyTable::greedy(&q_from_v(mdp, &v));
    for _ in 0..POLISH_ROUNDS {
        let exact = policy_evaluation(mdp, &pi)?;
        let next = PolicyTable::greedy(&exact.q);
        let improves = (0..mdp.n_states()).any(|s| {
            let (a, b) = (next.row(s).argmax(), pi.row(s).argmax());
            exact.q.get(s, a) > exact.q.get(s, b) + 1e-12 * (1.0 + exact.v[s].abs())
        });
        v = exact.v;
        if !improves {
            break;
        }
        pi = next;
    }
    let (q_star, residual) = bellman_residual(mdp, &v);
    Ok(ExactSolution {
        v_star: v,
        pi_star: pi,
        q_star,
        residual,
    })
}
