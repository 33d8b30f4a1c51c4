//! Closed-form policy updates: Wasserstein (WPO), Sinkhorn (SPO) and the KL baseline.
//!
//! WPO and SPO move the mass of each old action `j` to actions `i` according to a column
//! stochastic plan `f(i, j)`; the new row is `new_i = sum_j old_j * f(i, j)`.

use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::policy::PolicyTable;
use crate::table::ActionTable;

/// Entries within this distance of a column maximum belong to its tie set.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// How WPO splits a column's mass across a tie set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum TieRule {
    /// Equal shares.
    Uniform,
    /// Maximize expected advantage subject to `sum_s rho_s * plan_cost_s <= delta`.
    Lp { rho: Vec<f64>, delta: f64 },
}

/// Tie split selected by configuration; the LP weights are supplied at update time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRuleKind {
    #[default]
    Uniform,
    Lp,
}

/// Which policy update a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UpdateKind {
    Wpo {
        #[serde(default)]
        tie_rule: TieRuleKind,
    },
    Spo,
    Kl,
}

impl UpdateKind {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateKind::Wpo { .. } => "wpo",
            UpdateKind::Spo => "spo",
            UpdateKind::Kl => "kl",
        }
    }
}

/// The per-state transport plan `f(i, j)`, stored as `weights[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlanRow {
    pub weights: Vec<Vec<f64>>,
    /// Maximizers of `A_i - beta * D_ij` for each source column `j` (WPO only).
    pub tie_sets: Vec<Vec<usize>>,
}

impl TransportPlanRow {
    /// `sum_j old_j sum_i f(i, j) D_ij`.
    pub fn cost(&self, old: &Distribution, d: &CostMatrix) -> f64 {
        let n = old.len();
        (0..n)
            .map(|j| old.get(j) * (0..n).map(|i| self.weights[i][j] * d.get(i, j)).sum::<f64>())
            .sum()
    }

    /// Coupling `Q_ij = old_j * f(i, j)`.
    pub fn coupling(&self, old: &Distribution) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(old.probs()).map(|(f, p)| f * p).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub new_policy: PolicyTable,
    /// One plan per state; empty for the KL update.
    pub plans: Vec<TransportPlanRow>,
    /// Transport cost of each state's plan; KL divergence per state for the KL update.
    pub plan_costs: Vec<f64>,
    pub beta_used: f64,
    pub lambda_used: Option<f64>,
    /// `plan_costs` weighted by the LP state weights when given, else averaged over states.
    pub expected_distance_moved: f64,
}

impl UpdateReport {
    /// `sum_s rho_s * plan_costs_s`.
    pub fn weighted_distance(&self, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.plan_costs).map(|(r, c)| r * c).sum()
    }
}

fn check_inputs(policy: &PolicyTable, advantage: &ActionTable, d: Option<&CostMatrix>) -> Result<()> {
    advantage.check_shape(policy.n_states(), policy.n_actions())?;
    if let Some(d) = d {
        if d.n() != policy.n_actions() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix over {} actions, policy over {}",
                d.n(),
                policy.n_actions()
            )));
        }
    }
    if advantage.as_slice().iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("advantage"));
    }
    Ok(())
}

/// Tie set of column `j`: `argmax_i A_i - beta * D_ij` within [`TIE_TOLERANCE`].
pub fn tie_set(adv: &[f64], beta: f64, d: &CostMatrix, j: usize) -> Vec<usize> {
    let scores: Vec<f64> = adv
        .iter()
        .enumerate()
        .map(|(i, a)| a - beta * d.get(i, j))
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..adv.len())
        .filter(|&i| scores[i] >= best - TIE_TOLERANCE)
        .collect()
}

fn apply_plans(policy: &PolicyTable, plans: &[TransportPlanRow]) -> Result<PolicyTable> {
    let n = policy.n_actions();
    let rows = plans
        .iter()
        .zip(policy.rows())
        .map(|(plan, old)| {
            Distribution::new(
                (0..n)
                    .map(|i| (0..n).map(|j| old.get(j) * plan.weights[i][j]).sum())
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    PolicyTable::new(rows)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// Wasserstein trust-region update with multiplier `beta`.
pub fn wpo_update(
    policy: &PolicyTable,
    advantage: &ActionTable,
    beta: f64,
    d: &CostMatrix,
    tie_rule: &TieRule,
) -> Result<UpdateReport> {
    check_inputs(policy, advantage, Some(d))?;
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::NegativeBeta(beta));
    }
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta"));
    }
    let n = policy.n_actions();
    let tie_sets: Vec<Vec<Vec<usize>>> = (0..policy.n_states())
        .map(|s| (0..n).map(|j| tie_set(advantage.row(s), beta, d, j)).collect())
        .collect();
    let plans: Vec<TransportPlanRow> = match tie_rule {
        TieRule::Uniform => tie_sets
            .into_iter()
            .map(|sets| {
                let mut weights = vec![vec![0.0; n]; n];
                for (j, set) in sets.iter().enumerate() {
                    let share = 1.0 / set.len() as f64;
                    for &i in set {
                        weights[i][j] = share;
                    }
                }
                TransportPlanRow {
                    weights,
                    tie_sets: sets,
                }
            })
            .collect(),
        TieRule::Lp { rho, delta } => lp_plans(policy, advantage, d, tie_sets, rho, *delta)?,
    };
    let new_policy = apply_plans(policy, &plans)?;
    let plan_costs: Vec<f64> = plans
        .iter()
        .zip(policy.rows())
        .map(|(p, old)| p.cost(old, d))
        .collect();
    let expected_distance_moved = match tie_rule {
        TieRule::Uniform => mean(&plan_costs),
        TieRule::Lp { rho, .. } => rho.iter().zip(&plan_costs).map(|(r, c)| r * c).sum(),
    };
    Ok(UpdateReport {
        new_policy,
        plans,
        plan_costs,
        beta_used: beta,
        lambda_used: None,
        expected_distance_moved,
    })
}

/// One upper-hull step inside a group: move `fraction`-able mass from option `from` to `to`.
struct Increment {
    group: usize,
    rank: usize,
    from: usize,
    to: usize,
    dcost: f64,
    efficiency: f64,
}

/// Splits tie sets by a fractional multiple-choice knapsack: every (state, column) group with
/// weight `rho_s * old_j` picks a mixture of its tie-set actions, maximizing weighted
/// advantage under the global budget `delta` on weighted transport cost. The LP optimum
/// starts each group at its cheapest action and buys upper-hull increments in order of
/// advantage gained per unit cost.
fn lp_plans(
    policy: &PolicyTable,
    advantage: &ActionTable,
    d: &CostMatrix,
    tie_sets: Vec<Vec<Vec<usize>>>,
    rho: &[f64],
    delta: f64,
) -> Result<Vec<TransportPlanRow>> {
    let (ns, n) = (policy.n_states(), policy.n_actions());
    if rho.len() != ns {
        return Err(Error::ShapeMismatch(format!(
            "{} state weights for {} states",
            rho.len(),
            ns
        )));
    }
    if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidProblem("state weights must be finite and nonnegative".into()));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidProblem(format!("trust-region radius {delta} must be nonnegative")));
    }
    // choice[g] = (option, mass) pairs of the group's mixture
    let mut choices: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ns * n);
    let mut increments = Vec::new();
    let mut spent = 0.0;
    for s in 0..ns {
        for j in 0..n {
            let g = s * n + j;
            let w = rho[s] * policy.prob(s, j);
            let set = &tie_sets[s][j];
            let mut options: Vec<(f64, f64, usize)> = set
                .iter()
                .map(|&i| (d.get(i, j), advantage.get(s, i), i))
                .collect();
            // cheapest first; among equal cost the best advantage, then lowest index
            options.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then(b.1.total_cmp(&a.1))
                    .then(a.2.cmp(&b.2))
            });
            let base = options[0];
            choices.push(vec![(base.2, 1.0)]);
            spent += w * base.0;
            if w == 0.0 {
                continue;
            }
            let mut hull: Vec<(f64, f64, usize)> = vec![base];
            for &o in &options[1..] {
                if o.0 <= hull.last().unwrap().0 || o.1 <= base.1 {
                    continue;
                }
                while hull.len() >= 2 {
                    let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                    // pop b when it lies on or below the chord from a to o
                    if (b.1 - a.1) * (o.0 - a.0) <= (o.1 - a.1) * (b.0 - a.0) {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(o);
            }
            for (rank, pair) in hull.windows(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                let dcost = b.0 - a.0;
                let dvalue = b.1 - a.1;
                if dvalue > 0.0 {
                    increments.push(Increment {
                        group: g,
                        rank,
                        from: a.2,
                        to: b.2,
                        dcost: w * dcost,
                        efficiency: dvalue / dcost,
                    });
                }
            }
        }
    }
    increments.sort_by(|a, b| {
        b.efficiency
            .total_cmp(&a.efficiency)
            .then(a.group.cmp(&b.group))
            .then(a.rank.cmp(&b.rank))
    });
    let mut budget = delta - spent;
    for inc in increments {
        if budget <= 0.0 {
            break;
        }
        let fraction = (budget / inc.dcost).min(1.0);
        let mix = &mut choices[inc.group];
        // the previous increment of this group completed, so `from` holds all the mass
        debug_assert!(mix.last().is_some_and(|&(i, m)| i == inc.from && m == 1.0));
        if fraction >= 1.0 {
            *mix = vec![(inc.to, 1.0)];
        } else {
            *mix = vec![(inc.from, 1.0 - fraction), (inc.to, fraction)];
        }
        budget -= fraction * inc.dcost;
        if fraction < 1.0 {
            break;
        }
    }
    Ok((0..ns)
        .map(|s| {
            let mut weights = vec![vec![0.0; n]; n];
            for j in 0..n {
                for &(i, m) in &choices[s * n + j] {
                    weights[i][j] += m;
                }
            }
            TransportPlanRow {
                weights,
                tie_sets: tie_sets[s].clone(),
            }
        })
        .collect())
}

/// Column softmax of `lambda / beta * A_i - lambda * D_ij`, computed with a max shift.
pub fn sinkhorn_plan(adv: &[f64], beta: f64, lambda: f64, d: &CostMatrix) -> Vec<Vec<f64>> {
    let n = adv.len();
    let mut weights = vec![vec![0.0; n]; n];
    for j in 0..n {
        let logits: Vec<f64> = (0..n)
            .map(|i| lambda * (adv[i] / beta - d.get(i, j)))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for i in 0..n {
            weights[i][j] = exps[i] / total;
        }
    }
    weights
}

/// Sinkhorn trust-region update with multiplier `beta` and entropic weight `lambda`.
pub fn spo_update(
    policy: &PolicyTable,
    advantage: &ActionTable,
    beta: f64,
    lambda: f64,
    d: &CostMatrix,
) -> Result<UpdateReport> {
    check_inputs(policy, advantage, Some(d))?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::NonPositiveBeta(beta));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let plans: Vec<TransportPlanRow> = (0..policy.n_states())
        .map(|s| TransportPlanRow {
            weights: sinkhorn_plan(advantage.row(s), beta, lambda, d),
            tie_sets: Vec::new(),
        })
        .collect();
    let new_policy = apply_plans(policy, &plans)?;
    let plan_costs: Vec<f64> = plans
        .iter()
        .zip(policy.rows())
        .map(|(p, old)| p.cost(old, d))
        .collect();
    Ok(UpdateReport {
        new_policy,
        expected_distance_moved: mean(&plan_costs),
        plans,
        plan_costs,
        beta_used: beta,
        lambda_used: Some(lambda),
    })
}

/// Exponential-weights update `old * exp(A / beta)`, renormalized per state.
pub fn kl_update(policy: &PolicyTable, advantage: &ActionTable, beta: f64) -> Result<UpdateReport> {
    check_inputs(policy, advantage, None)?;
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::NonPositiveBeta(beta));
    }
    let n = policy.n_actions();
    let mut rows = Vec::with_capacity(policy.n_states());
    let mut divergences = Vec::with_capacity(policy.n_states());
    for (s, old) in policy.rows().iter().enumerate() {
        let logits: Vec<f64> = (0..n)
            .map(|a| {
                let p = old.get(a);
                if p > 0.0 {
                    p.ln() + advantage.get(s, a) / beta
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row = Distribution::new(logits.iter().map(|l| (l - max).exp()).collect())?;
        divergences.push(row.kl(old));
        rows.push(row);
    }
    Ok(UpdateReport {
        new_policy: PolicyTable::new(rows)?,
        plans: Vec::new(),
        expected_distance_moved: mean(&divergences),
        plan_costs: divergences,
        beta_used: beta,
        lambda_used: None,
    })
}
