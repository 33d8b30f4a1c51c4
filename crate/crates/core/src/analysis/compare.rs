use serde::{Deserialize, Serialize};

use super::oracle::{policy_evaluation, value_iteration};
use super::verify::TheoremReport;
use crate::dual::{solve_kl_multiplier, solve_wasserstein_dual, DualProblem};
use crate::envs::EnvSpec;
use crate::error::Result;
use crate::estimation::exact_visitation;
use crate::mdp::TabularMdp;
use crate::policy::PolicyTable;
use crate::updates::{kl_update, wpo_update, TieRule};

/// Exact-mode trajectory of one update rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateCurve {
    /// `J(pi_k)` for each visited iterate.
    pub j: Vec<f64>,
    pub betas: Vec<f64>,
    /// First `k` whose greedy policy is optimal.
    pub iterations_to_optimal: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub report: TheoremReport,
    pub wpo: UpdateCurve,
    pub kl: UpdateCurve,
}

/// Whether the deterministic greedy policy of `pi` attains `v_star` everywhere.
pub fn greedy_is_optimal(mdp: &TabularMdp, pi: &PolicyTable, v_star: &[f64]) -> Result<bool> {
    let greedy = PolicyTable::deterministic(&pi.modes(), pi.n_actions());
    let v = policy_evaluation(mdp, &greedy)?.v;
    let scale = v_star.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    Ok(v.iter().zip(v_star).all(|(a, b)| (a - b).abs() <= 1e-8 * scale))
}

#[derive(Clone, Copy)]
enum Rule {
    Wasserstein,
    Kl,
}

fn run(env: &EnvSpec, rule: Rule, delta: f64, iterations: usize, init: &PolicyTable, v_star: &[f64]) -> Result<UpdateCurve> {
    let mdp = &env.mdp;
    let d = env.cost()?;
    let mut pi = init.clone();
    let mut curve = UpdateCurve {
        j: Vec::new(),
        betas: Vec::new(),
        iterations_to_optimal: None,
    };
    for k in 0..=iterations {
        let values = policy_evaluation(mdp, &pi)?;
        curve.j.push(values.j);
        if greedy_is_optimal(mdp, &pi, v_star)? {
            curve.iterations_to_optimal = Some(k);
            break;
        }
        if k == iterations {
            break;
        }
        let rho = exact_visitation(mdp, &pi)?;
        let problem = DualProblem::new(values.a.clone(), pi.clone(), rho.clone(), d.clone(), delta)?;
        let (beta, next) = match rule {
            Rule::Wasserstein => {
                let beta = solve_wasserstein_dual(&problem)?.beta_star;
                let tie = TieRule::Lp { rho, delta };
                (beta, wpo_update(&pi, &values.a, beta, &d, &tie)?.new_policy)
            }
            Rule::Kl => {
                let beta = solve_kl_multiplier(&problem)?.beta_star;
                (beta, kl_update(&pi, &values.a, beta)?.new_policy)
            }
        };
        curve.betas.push(beta);
        pi = next;
    }
    Ok(curve)
}

/// Runs exact-advantage WPO and KL updates with per-iteration multipliers sized to the same
/// radius, starting from `init`, and checks that WPO reaches an optimal greedy policy no later.
pub fn compare_updates(env: &EnvSpec, delta: f64, iterations: usize, init: &PolicyTable) -> Result<Comparison> {
    init.check_shape(env.n_states(), env.n_actions())?;
    let v_star = value_iteration(&env.mdp, 1e-10)?.v_star;
    let wpo = run(env, Rule::Wasserstein, delta, iterations, init, &v_star)?;
    let kl = run(env, Rule::Kl, delta, iterations, init, &v_star)?;
    let never = (iterations + 1) as f64;
    let count = |c: &UpdateCurve| c.iterations_to_optimal.map_or(never, |k| k as f64);
    let mut report = TheoremReport::new("grid-compare", 0.0);
    report.at_most("iterations to optimal (wpo vs kl)", 0, count(&wpo), count(&kl));
    Ok(Comparison { report, wpo, kl })
}
