//! Exact tabular oracles and numerical certificates for the convergence results.

mod compare;
mod oracle;
mod verify;

pub use compare::{compare_updates, greedy_is_optimal, Comparison, UpdateCurve};
pub use oracle::{exact_advantage, policy_evaluation, value_iteration, ExactSolution, PolicyValues};
pub use verify::{
    verify_lemma1, verify_theorem3, verify_theorem4, verify_theorem5, Check, RunTrace, TheoremReport,
};
