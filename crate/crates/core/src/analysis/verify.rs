use serde::{Deserialize, Serialize};

use super::oracle::{policy_evaluation, value_iteration};
use crate::cost::CostMatrix;
use crate::dual::{
    beta_bar, beta_floor, sinkhorn_beta_upper_bound, sinkhorn_dual_objective, wasserstein_dual_objective,
    DualProblem,
};
use crate::error::{Error, Result};
use crate::estimation::exact_visitation;
use crate::mdp::TabularMdp;
use crate::policy::PolicyTable;
use crate::table::ActionTable;
use crate::updates::{spo_update, wpo_update, TieRule, UpdateKind};

const VALUE_TOLERANCE: f64 = 1e-10;
/// Plan errors below this are rounding noise from the large-lambda softmax.
const LEMMA1_TOLERANCE: f64 = 1e-9;

/// One inequality `lhs <= rhs` (or `>=`, as labelled); `margin` is positive when it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: String,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl TheoremReport {
    pub fn new(theorem: impl Into<String>, tolerance: f64) -> Self {
        Self {
            theorem: theorem.into(),
            tolerance,
            checks: Vec::new(),
            pass: true,
        }
    }

    /// Records `lhs <= rhs`.
    pub fn at_most(&mut self, label: &str, index: usize, lhs: f64, rhs: f64) {
        self.push(label, index, lhs, rhs, rhs - lhs);
    }

    /// Records `lhs >= rhs`.
    pub fn at_least(&mut self, label: &str, index: usize, lhs: f64, rhs: f64) {
        self.push(label, index, lhs, rhs, lhs - rhs);
    }

    fn push(&mut self, label: &str, index: usize, lhs: f64, rhs: f64, margin: f64) {
        let pass = margin >= -self.tolerance;
        self.pass &= pass;
        self.checks.push(Check {
            label: label.to_string(),
            index,
            lhs,
            rhs,
            margin,
            pass,
        });
    }

    /// The first failing check, if any.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }

    /// One line per failing check plus a verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in self.checks.iter().filter(|c| !c.pass) {
            out.push_str(&format!(
                "FAIL {} [{}]: lhs {:.12e} rhs {:.12e} margin {:.3e}\n",
                c.label, c.index, c.lhs, c.rhs, c.margin
            ));
        }
        out.push_str(&format!(
            "{}: {} ({} checks, worst margin {:.3e})",
            self.theorem,
            if self.pass { "pass" } else { "FAIL" },
            self.checks.len(),
            self.worst_margin()
        ));
        out
    }
}

/// What a training run did, in enough detail to recompute the theorem bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub update: UpdateKind,
    pub cost: CostMatrix,
    pub exact_advantages: bool,
    /// `pi_0 .. pi_K`.
    pub policies: Vec<PolicyTable>,
    pub betas: Vec<f64>,
    pub lambdas: Vec<Option<f64>>,
    /// Per-state transport cost of each update.
    pub plan_costs: Vec<Vec<f64>>,
    /// `||A_hat - A||_inf` per iteration when it could be measured.
    #[serde(default)]
    pub advantage_errors: Option<Vec<f64>>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.betas.len()
    }

    fn check_lengths(&self) -> Result<()> {
        let k = self.betas.len();
        if self.policies.len() != k + 1 || self.lambdas.len() != k || self.plan_costs.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "trace with {} policies, {} betas, {} lambdas, {} plan costs",
                self.policies.len(),
                k,
                self.lambdas.len(),
                self.plan_costs.len()
            )));
        }
        Ok(())
    }
}

/// Entrywise distance between the SPO and uniform-tie WPO plans as `lambda` grows.
/// Passes when the distance never increases and, for a final `lambda >= 1e6`, ends below 1e-4.
pub fn verify_lemma1(
    policy: &PolicyTable,
    advantage: &ActionTable,
    beta: f64,
    d: &CostMatrix,
    lambdas: &[f64],
) -> Result<TheoremReport> {
    let wpo = wpo_update(policy, advantage, beta, d, &TieRule::Uniform)?;
    let mut report = TheoremReport::new("lemma1", LEMMA1_TOLERANCE);
    let mut previous = f64::INFINITY;
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let spo = spo_update(policy, advantage, beta, lambda, d)?;
        let mut e = 0.0f64;
        for (a, b) in spo.plans.iter().zip(&wpo.plans) {
            for (ra, rb) in a.weights.iter().zip(&b.weights) {
                for (x, y) in ra.iter().zip(rb) {
                    e = e.max((x - y).abs());
                }
            }
        }
        report.at_most(&format!("plan error at lambda {lambda:e}"), idx, e, previous);
        previous = e;
    }
    if let Some(&last) = lambdas.last() {
        if last >= 1e6 {
            report.at_most("terminal plan error", lambdas.len() - 1, previous, 1e-4);
        }
    }
    Ok(report)
}

/// `|F_lambda(beta) - F(beta)| <= beta_UB N ln N / lambda` on an even grid over `[0, beta_UB]`.
pub fn verify_theorem3(problem: &DualProblem, lambda: f64, grid_points: usize) -> Result<TheoremReport> {
    if grid_points < 10 {
        return Err(Error::InvalidConfig("the envelope check needs at least 10 grid points".into()));
    }
    let n = problem.n_actions() as f64;
    let bar = match beta_bar(problem) {
        Ok(b) => b,
        Err(Error::DegenerateProblem) => 0.0,
        Err(e) => return Err(e),
    };
    let ub = sinkhorn_beta_upper_bound(problem).max(bar);
    let envelope = ub * n * n.ln() / lambda * problem.mass().max(1.0) + 1e-9;
    let floor = beta_floor(problem);
    let mut report = TheoremReport::new("theorem3", 0.0);
    for k in 0..grid_points {
        let beta = (ub * k as f64 / (grid_points - 1) as f64).max(floor);
        let f = wasserstein_dual_objective(problem, beta)?;
        let fl = sinkhorn_dual_objective(problem, beta, lambda)?.value;
        report.at_most("envelope", k, (fl - f).abs(), envelope);
    }
    Ok(report)
}

/// Performance improvement bound of each recorded update, with `epsilon = 0` for exact runs.
pub fn verify_theorem4(mdp: &TabularMdp, trace: &RunTrace) -> Result<TheoremReport> {
    trace.check_lengths()?;
    if matches!(trace.update, UpdateKind::Kl) {
        return Err(Error::Unsupported("the improvement bound covers WPO and SPO updates".into()));
    }
    let eps: Vec<f64> = if trace.exact_advantages {
        vec![0.0; trace.iterations()]
    } else {
        trace.advantage_errors.clone().ok_or(Error::MissingAdvantageErrorBound)?
    };
    let gamma = mdp.gamma();
    let mut report = TheoremReport::new("theorem4", 1e-8);
    let mut j = policy_evaluation(mdp, &trace.policies[0])?.j;
    for k in 0..trace.iterations() {
        let next = &trace.policies[k + 1];
        let j_next = policy_evaluation(mdp, next)?.j;
        let rho = exact_visitation(mdp, next)?;
        let moved: f64 = rho.iter().zip(&trace.plan_costs[k]).map(|(r, c)| r * c).sum();
        let rhs = j + trace.betas[k] * moved - 2.0 * eps[k] / (1.0 - gamma);
        report.at_least("improvement", k, j_next, rhs);
        j = j_next;
    }
    Ok(report)
}

fn sup_gap(v_star: &[f64], v: &[f64]) -> f64 {
    v_star.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Per-iteration contraction of `||V* - V^pi_k||_inf`, plus the geometric bound when every
/// multiplier (and `lambda`) is the same.
pub fn verify_theorem5(mdp: &TabularMdp, trace: &RunTrace) -> Result<TheoremReport> {
    trace.check_lengths()?;
    if !trace.exact_advantages {
        return Err(Error::SampledModeUnsupported);
    }
    let gamma = mdp.gamma();
    let d_norm = trace.cost.inf_norm();
    let ln_n = (trace.cost.n() as f64).ln();
    let slack = |beta: f64, lambda: Option<f64>| -> Result<f64> {
        match (trace.update, lambda) {
            (UpdateKind::Wpo { .. }, _) => Ok(beta * d_norm),
            (UpdateKind::Spo, Some(l)) => Ok(2.0 * beta / (1.0 - gamma) * (d_norm + 2.0 * ln_n / l)),
            (UpdateKind::Spo, None) => Err(Error::InvalidConfig("SPO trace without lambda".into())),
            (UpdateKind::Kl, _) => Err(Error::Unsupported("the contraction bound covers WPO and SPO updates".into())),
        }
    };
    let v_star = value_iteration(mdp, VALUE_TOLERANCE)?.v_star;
    let gaps = trace
        .policies
        .iter()
        .map(|p| Ok(sup_gap(&v_star, &policy_evaluation(mdp, p)?.v)))
        .collect::<Result<Vec<f64>>>()?;
    let mut report = TheoremReport::new("theorem5", 1e-8);
    for k in 0..trace.iterations() {
        let rhs = gamma * gaps[k] + slack(trace.betas[k], trace.lambdas[k])?;
        report.at_most("contraction", k, gaps[k + 1], rhs);
    }
    let constant = trace.iterations() > 0
        && trace.betas.iter().all(|&b| b == trace.betas[0])
        && trace.lambdas.iter().all(|&l| l == trace.lambdas[0]);
    if constant {
        let t = trace.iterations();
        // slack(beta) is beta * B for both updates
        let rhs = gamma.powi(t as i32) * gaps[0] + slack(trace.betas[0], trace.lambdas[0])? / (1.0 - gamma);
        report.at_most("geometric", t, gaps[t], rhs);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostPreset;
    use crate::envs;
    use crate::rng::Rng;

    #[test]
    fn lemma1_on_random_instances() {
        let mut rng = Rng::new(2);
        let lambdas = [1.0, 10.0, 1e2, 1e3, 1e4, 1e6];
        for _ in 0..20 {
            let pi = PolicyTable::random(2, 4, &mut rng);
            let a = ActionTable::from_fn(2, 4, |_, _| rng.range(-1.0, 1.0));
            let d = CostPreset::L1Index.build(4).unwrap();
            let report = verify_lemma1(&pi, &a, 0.3, &d, &lambdas).unwrap();
            assert!(report.pass, "{}", report.summary());
        }
    }

    #[test]
    fn lemma1_with_constant_advantage() {
        let pi = PolicyTable::uniform(1, 3);
        let a = ActionTable::from_rows(vec![vec![0.5; 3]]).unwrap();
        let d = CostMatrix::zero_one(3);
        assert!(verify_lemma1(&pi, &a, 0.2, &d, &[1.0, 1e6]).unwrap().pass);
    }

    #[test]
    fn theorem3_single_action_is_exact() {
        let p = DualProblem::new(
            ActionTable::zeros(2, 1),
            PolicyTable::uniform(2, 1),
            vec![0.5, 0.5],
            CostMatrix::zero_one(1),
            0.3,
        )
        .unwrap();
        let report = verify_theorem3(&p, 10.0, 20).unwrap();
        assert!(report.pass);
        assert!(report.checks.iter().all(|c| c.lhs.abs() < 1e-12));
    }

    #[test]
    fn theorem3_envelope_scales_with_lambda() {
        let mut rng = Rng::new(9);
        let pi = PolicyTable::random(2, 3, &mut rng);
        let a = ActionTable::from_fn(2, 3, |_, _| rng.range(-1.0, 1.0));
        let p = DualProblem::new(a, pi, vec![0.4, 0.6], CostMatrix::zero_one(3), 0.2).unwrap();
        let r1 = verify_theorem3(&p, 1e4, 50).unwrap();
        let r2 = verify_theorem3(&p, 2e4, 50).unwrap();
        assert!(r1.pass && r2.pass);
        let (b1, b2) = (r1.checks[0].rhs - 1e-9, r2.checks[0].rhs - 1e-9);
        assert!((b1 / b2 - 2.0).abs() < 1e-9);
    }

    fn policy_iteration_trace(env: &crate::envs::EnvSpec, betas: &[f64]) -> RunTrace {
        let d = env.cost().unwrap();
        let mut pi = PolicyTable::uniform(env.n_states(), env.n_actions());
        let mut trace = RunTrace {
            update: UpdateKind::Wpo {
                tie_rule: crate::updates::TieRuleKind::Uniform,
            },
            cost: d.clone(),
            exact_advantages: true,
            policies: vec![pi.clone()],
            betas: Vec::new(),
            lambdas: Vec::new(),
            plan_costs: Vec::new(),
            advantage_errors: None,
        };
        for &beta in betas {
            let a = policy_evaluation(&env.mdp, &pi).unwrap().a;
            let report = wpo_update(&pi, &a, beta, &d, &TieRule::Uniform).unwrap();
            pi = report.new_policy;
            trace.policies.push(pi.clone());
            trace.betas.push(beta);
            trace.lambdas.push(None);
            trace.plan_costs.push(report.plan_costs);
        }
        trace
    }

    #[test]
    fn pure_policy_iteration_contracts() {
        let env = envs::default_chain();
        let trace = policy_iteration_trace(&env, &[0.0; 10]);
        let t5 = verify_theorem5(&env.mdp, &trace).unwrap();
        assert!(t5.pass, "{}", t5.summary());
        let t4 = verify_theorem4(&env.mdp, &trace).unwrap();
        assert!(t4.pass, "{}", t4.summary());
    }

    #[test]
    fn constant_beta_meets_geometric_bound() {
        let env = envs::default_chain();
        let trace = policy_iteration_trace(&env, &[0.5; 30]);
        let t5 = verify_theorem5(&env.mdp, &trace).unwrap();
        assert!(t5.pass, "{}", t5.summary());
        assert_eq!(t5.checks.last().unwrap().label, "geometric");
    }

    #[test]
    fn sampled_traces_need_errors() {
        let env = envs::default_chain();
        let mut trace = policy_iteration_trace(&env, &[0.5; 2]);
        trace.exact_advantages = false;
        assert_eq!(verify_theorem4(&env.mdp, &trace).unwrap_err(), Error::MissingAdvantageErrorBound);
        assert_eq!(verify_theorem5(&env.mdp, &trace).unwrap_err(), Error::SampledModeUnsupported);
        trace.advantage_errors = Some(vec![0.0, 0.0]);
        assert!(verify_theorem4(&env.mdp, &trace).unwrap().pass);
    }
}
