//! Standalone solvers and environment inspection.

use std::path::Path;

use ottr_core::dual::{
    beta_bar, beta_floor, sinkhorn_dual_objective, solve_sinkhorn_dual, solve_wasserstein_dual,
    wasserstein_dual_objective, DualProblem,
};
use ottr_core::ot::{sinkhorn_with, wasserstein, SINKHORN_MAX_ITER, SINKHORN_TOLERANCE};
use ottr_core::{envs, CostMatrix, Distribution, Error};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::io::read_json;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OtInput {
    p: Distribution,
    q: Distribution,
    cost: CostMatrix,
    #[serde(default)]
    lambda: Option<f64>,
}

pub fn ot(input: &Path, lambda: Option<f64>, max_iter: Option<usize>) -> CliResult<()> {
    let input: OtInput = read_json(input)?;
    let result = match lambda.or(input.lambda) {
        None => wasserstein(&input.p, &input.q, &input.cost)?,
        Some(l) => sinkhorn_with(
            &input.p,
            &input.q,
            &input.cost,
            l,
            SINKHORN_TOLERANCE,
            max_iter.unwrap_or(SINKHORN_MAX_ITER),
        )?,
    };
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    Ok(())
}

pub fn dual(problem: &Path, lambda: Option<f64>, points: usize, beta_max: Option<f64>) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let problem: DualProblem = read_json(problem)?;
    let solution = match lambda {
        None => solve_wasserstein_dual(&problem)?,
        Some(l) => solve_sinkhorn_dual(&problem, l)?,
    };
    let objective = |beta: f64| -> CliResult<f64> {
        Ok(match lambda {
            None => wasserstein_dual_objective(&problem, beta)?,
            Some(l) => sinkhorn_dual_objective(&problem, beta, l)?.value,
        })
    };
    let bar = match beta_bar(&problem) {
        Ok(b) => b,
        Err(Error::DegenerateProblem) => 0.0,
        Err(e) => return Err(e.into()),
    };
    let hi = beta_max.unwrap_or(1.5 * bar.max(solution.beta_star).max(1e-3));
    let lo = if lambda.is_some() { beta_floor(&problem) } else { 0.0 };
    let mut betas: Vec<(f64, bool)> = (0..points)
        .map(|k| (lo + (hi - lo) * k as f64 / (points - 1) as f64, false))
        .collect();
    betas.push((solution.beta_star, true));
    betas.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let fail = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(["beta", "objective", "optimum"]).map_err(fail)?;
    for (beta, optimum) in betas {
        let f = objective(beta)?;
        w.write_record([beta.to_string(), f.to_string(), u8::from(optimum).to_string()])
            .map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(())
}

pub fn envs_list(json: bool) -> CliResult<()> {
    let all = envs::list();
    if json {
        println!("{}", serde_json::to_string_pretty(&all).expect("environments serialize"));
        return Ok(());
    }
    println!("{:<15} {:>7} {:>8} {:>6} {:>13} {:>6}", "name", "states", "actions", "gamma", "cost", "limit");
    for e in &all {
        println!(
            "{:<15} {:>7} {:>8} {:>6} {:>13} {:>6}",
            e.name,
            e.n_states(),
            e.n_actions(),
            e.mdp.gamma(),
            e.default_cost.name(),
            e.mdp.episode_limit().map_or("-".to_string(), |l| l.to_string()),
        );
    }
    Ok(())
}

pub fn envs_show(name: &str) -> CliResult<()> {
    let env = envs::by_name(name)?;
    println!("{}", serde_json::to_string_pretty(&env).expect("environment serializes"));
    Ok(())
}
