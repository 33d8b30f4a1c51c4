use std::time::Instant;

use thiserror::Error as ThisError;

use super::config::{AdvantageMode, InitialPolicy, RhoSource, TrainConfig};
use super::log::{IterationRecord, RunLog, RunSummary};
use crate::analysis::{policy_evaluation, value_iteration, PolicyValues, RunTrace};
use crate::dual::{solve_kl_multiplier, solve_sinkhorn_dual, solve_wasserstein_dual, DualProblem};
use crate::envs::rollout;
use crate::error::{Error, Result};
use crate::estimation::{
    empirical_visitation, estimate_advantage, exact_visitation, update_value, value_targets, ValueTable,
};
use crate::policy::PolicyTable;
use crate::rng::Rng;
use crate::table::ActionTable;
use crate::trajectory::Trajectory;
use crate::updates::{kl_update, spo_update, wpo_update, TieRule, TieRuleKind, UpdateKind};

const INIT_STREAM: u64 = 1;
const ROLLOUT_STREAM: u64 = 2;
const SUBSAMPLE_STREAM: u64 = 3;

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: PolicyTable,
    pub value: ValueTable,
    pub log: RunLog,
    pub summary: RunSummary,
    pub trace: Option<RunTrace>,
    /// The config with every default filled in.
    pub config: TrainConfig,
}

/// An aborted run with everything logged before the failing iteration.
#[derive(Debug, Clone, ThisError)]
#[error("training failed after {} iterations: {error}", log.len())]
pub struct TrainFailure {
    pub error: Error,
    pub log: RunLog,
    pub trace: Option<Box<RunTrace>>,
}

fn coverage(trajs: &[Trajectory], n_states: usize, n_actions: usize) -> f64 {
    let mut seen = vec![false; n_states * n_actions];
    for step in trajs.iter().flat_map(|t| &t.steps) {
        seen[step.state * n_actions + step.action] = true;
    }
    seen.iter().filter(|&&b| b).count() as f64 / seen.len() as f64
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Loop {
    config: TrainConfig,
    log: RunLog,
    trace: Option<RunTrace>,
}

/// Runs the on-policy loop: rollouts, advantage estimates, critic update, multiplier, policy
/// update. Deterministic for a fixed config.
pub fn train(config: &TrainConfig) -> std::result::Result<TrainOutput, TrainFailure> {
    let fail = |error: Error| TrainFailure {
        error,
        log: RunLog::default(),
        trace: None,
    };
    config.validate().map_err(fail)?;
    let config = config.resolved().map_err(fail)?;
    let mut state = Loop {
        config,
        log: RunLog::default(),
        trace: None,
    };
    match state.run() {
        Ok(out) => Ok(out),
        Err(error) => Err(TrainFailure {
            error,
            log: state.log,
            trace: state.trace.map(Box::new),
        }),
    }
}

impl Loop {
    fn run(&mut self) -> Result<TrainOutput> {
        let started = Instant::now();
        let cfg = self.config.clone();
        let env = cfg.env_spec()?;
        let mdp = &env.mdp;
        let (n_s, n_a) = (env.n_states(), env.n_actions());
        let d = cfg.cost_matrix(&env)?;
        let gamma = mdp.gamma();
        let root = Rng::new(cfg.seed);
        let mut rollout_rng = root.fork(ROLLOUT_STREAM);
        let mut subsample_rng = root.fork(SUBSAMPLE_STREAM);

        let mut policy = match cfg.initial_policy {
            InitialPolicy::Uniform => PolicyTable::uniform(n_s, n_a),
            InitialPolicy::Random => PolicyTable::random(n_s, n_a, &mut root.fork(INIT_STREAM)),
        };
        let mut value = ValueTable::zeros(n_s, cfg.value_lr);
        let mut schedule = cfg.beta_schedule.clone();
        let exact_mode = cfg.advantage_mode == AdvantageMode::Exact;
        let v_star = if cfg.exact_metrics {
            Some(value_iteration(mdp, 1e-10)?.v_star)
        } else {
            None
        };
        if cfg.trace {
            self.trace = Some(RunTrace {
                update: cfg.update,
                cost: d.clone(),
                exact_advantages: exact_mode,
                policies: vec![policy.clone()],
                betas: Vec::new(),
                lambdas: Vec::new(),
                plan_costs: Vec::new(),
                advantage_errors: (!exact_mode && cfg.exact_metrics).then(Vec::new),
            });
        }

        for k in 0..cfg.iterations {
            let tick = Instant::now();
            let trajs = rollout(&env, &policy, &mut rollout_rng, cfg.episodes_per_iter)?;
            let j_sampled = trajs.iter().map(Trajectory::total_reward).sum::<f64>() / trajs.len() as f64;
            let exact: Option<PolicyValues> = if exact_mode || cfg.exact_metrics {
                Some(policy_evaluation(mdp, &policy)?)
            } else {
                None
            };
            let advantage: ActionTable = if exact_mode {
                exact.as_ref().expect("evaluated in exact mode").a.clone()
            } else {
                estimate_advantage(&trajs, &value, cfg.advantage, gamma, n_a, cfg.n_a_cap, &mut subsample_rng)?.a_hat
            };
            let targets = value_targets(&trajs, &value, cfg.advantage, gamma)?;
            value = update_value(value, &targets);

            let rho = match cfg.rho_source {
                RhoSource::Exact => exact_visitation(mdp, &policy)?,
                RhoSource::Empirical => empirical_visitation(&trajs, gamma, n_s)?,
            };
            let lambda = match cfg.update {
                UpdateKind::Spo => cfg.lambda_schedule.as_ref().map(|l| l.at(k)),
                _ => None,
            };
            let problem = || DualProblem::new(advantage.clone(), policy.clone(), rho.clone(), d.clone(), cfg.delta);
            let beta = schedule.next_beta_with(k, || {
                let p = problem()?;
                Ok(match cfg.update {
                    UpdateKind::Wpo { .. } => solve_wasserstein_dual(&p)?.beta_star,
                    UpdateKind::Spo => solve_sinkhorn_dual(&p, lambda.expect("validated"))?.beta_star,
                    UpdateKind::Kl => solve_kl_multiplier(&p)?.beta_star,
                })
            })?;
            let report = match cfg.update {
                UpdateKind::Wpo { tie_rule } => {
                    let rule = match tie_rule {
                        TieRuleKind::Uniform => TieRule::Uniform,
                        TieRuleKind::Lp => TieRule::Lp {
                            rho: rho.clone(),
                            delta: cfg.delta,
                        },
                    };
                    wpo_update(&policy, &advantage, beta, &d, &rule)?
                }
                UpdateKind::Spo => spo_update(&policy, &advantage, beta, lambda.expect("validated"), &d)?,
                UpdateKind::Kl => kl_update(&policy, &advantage, beta)?,
            };

            if let Some(trace) = &mut self.trace {
                trace.policies.push(report.new_policy.clone());
                trace.betas.push(beta);
                trace.lambdas.push(lambda);
                trace.plan_costs.push(report.plan_costs.clone());
                if let (Some(errors), Some(ex)) = (&mut trace.advantage_errors, &exact) {
                    errors.push(advantage.max_abs_diff(&ex.a));
                }
            }
            self.log.push(IterationRecord {
                k,
                beta,
                lambda,
                j_sampled,
                j_exact: exact.as_ref().filter(|_| cfg.exact_metrics).map(|e| e.j),
                vgap_inf: v_star.as_ref().zip(exact.as_ref()).map(|(vs, e)| sup_gap(vs, &e.v)),
                tr_distance: report.weighted_distance(&rho),
                coverage: coverage(&trajs, n_s, n_a),
                wall_ms: cfg.record_wall_time.then(|| tick.elapsed().as_secs_f64() * 1e3),
            });
            policy = report.new_policy;
        }

        let final_values = if cfg.exact_metrics {
            Some(policy_evaluation(mdp, &policy)?)
        } else {
            None
        };
        let summary = RunSummary {
            env: env.name.clone(),
            update: cfg.update.name().to_string(),
            seed: cfg.seed,
            iterations: cfg.iterations,
            final_return: self.log.tail_mean(0.1),
            final_j_exact: final_values.as_ref().map(|v| v.j),
            final_vgap_inf: v_star.as_ref().zip(final_values.as_ref()).map(|(vs, e)| sup_gap(vs, &e.v)),
            mean_beta: schedule.history.iter().sum::<f64>() / schedule.history.len().max(1) as f64,
            total_wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        Ok(TrainOutput {
            policy,
            value,
            log: std::mem::take(&mut self.log),
            summary,
            trace: self.trace.take(),
            config: cfg,
        })
    }
}
