//! One-dimensional duals for the trust-region multiplier `beta`, and `beta` schedules.

mod kl;
mod schedule;
mod sinkhorn;
mod wasserstein;
mod zero_one;

use serde::{Deserialize, Serialize};

pub use kl::{expected_kl, solve_kl_multiplier, KL_TOLERANCE};
pub use schedule::{BetaSchedule, BetaScheduleKind};
pub use sinkhorn::{
    beta_floor, sinkhorn_beta_upper_bound, sinkhorn_dual_objective, solve_sinkhorn_dual,
    SinkhornDualValue,
};
pub use wasserstein::{
    beta_bar, breakpoint_candidates, solve_wasserstein_dual, wasserstein_dual_objective,
};
pub use zero_one::{solve_zero_one_dual, solve_zero_one_dual_global};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::table::ActionTable;

/// Ingredients of the dual: advantages, the current policy, state weights and the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DualProblemRepr", into = "DualProblemRepr")]
pub struct DualProblem {
    advantage: ActionTable,
    old_policy: PolicyTable,
    rho: Vec<f64>,
    d: CostMatrix,
    delta: f64,
    a_max: f64,
}

impl DualProblem {
    /// `a_max` defaults to the largest absolute advantage.
    pub fn new(
        advantage: ActionTable,
        old_policy: PolicyTable,
        rho: Vec<f64>,
        d: CostMatrix,
        delta: f64,
    ) -> Result<Self> {
        let a_max = advantage.max_abs();
        Self::with_a_max(advantage, old_policy, rho, d, delta, a_max)
    }

    pub fn with_a_max(
        advantage: ActionTable,
        old_policy: PolicyTable,
        rho: Vec<f64>,
        d: CostMatrix,
        delta: f64,
        a_max: f64,
    ) -> Result<Self> {
        advantage.check_shape(old_policy.n_states(), old_policy.n_actions())?;
        if d.n() != old_policy.n_actions() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix over {} actions, policy over {}",
                d.n(),
                old_policy.n_actions()
            )));
        }
        if rho.len() != old_policy.n_states() {
            return Err(Error::ShapeMismatch(format!(
                "{} state weights for {} states",
                rho.len(),
                old_policy.n_states()
            )));
        }
        if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidProblem("state weights must be finite and nonnegative".into()));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidProblem(format!("radius {delta} must be nonnegative")));
        }
        if !a_max.is_finite() || a_max < advantage.max_abs() * (1.0 - 1e-12) {
            return Err(Error::InvalidProblem(format!(
                "a_max {a_max} is below the largest advantage {}",
                advantage.max_abs()
            )));
        }
        Ok(Self {
            advantage,
            old_policy,
            rho,
            d,
            delta,
            a_max,
        })
    }

    pub fn advantage(&self) -> &ActionTable {
        &self.advantage
    }

    pub fn old_policy(&self) -> &PolicyTable {
        &self.old_policy
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn n_states(&self) -> usize {
        self.old_policy.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.old_policy.n_actions()
    }

    /// Total state weight `sum_s rho_s`.
    pub fn mass(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// Same problem with another radius.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::with_a_max(
            self.advantage.clone(),
            self.old_policy.clone(),
            self.rho.clone(),
            self.d.clone(),
            delta,
            self.a_max,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct DualProblemRepr {
    advantage: ActionTable,
    old_policy: PolicyTable,
    rho: Vec<f64>,
    d: CostMatrix,
    delta: f64,
    #[serde(default)]
    a_max: Option<f64>,
}

impl TryFrom<DualProblemRepr> for DualProblem {
    type Error = Error;

    fn try_from(r: DualProblemRepr) -> Result<Self> {
        match r.a_max {
            Some(a) => DualProblem::with_a_max(r.advantage, r.old_policy, r.rho, r.d, r.delta, a),
            None => DualProblem::new(r.advantage, r.old_policy, r.rho, r.d, r.delta),
        }
    }
}

impl From<DualProblem> for DualProblemRepr {
    fn from(p: DualProblem) -> Self {
        Self {
            advantage: p.advantage,
            old_policy: p.old_policy,
            rho: p.rho,
            d: p.d,
            delta: p.delta,
            a_max: Some(p.a_max),
        }
    }
}

/// How a multiplier was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualMethod {
    Breakpoint,
    ZeroOneLocal,
    ZeroOneMultiStart,
    SinkhornDescent,
    KlBisection,
}

/// An optimal multiplier with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub beta_star: f64,
    pub objective: f64,
    /// Expected divergence of the update at `beta_star`.
    pub constraint_value: f64,
    /// `delta - constraint_value`.
    pub slack: f64,
    pub method: DualMethod,
    pub evaluations: usize,
}
