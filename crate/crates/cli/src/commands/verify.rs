use std::path::Path;

use clap::ValueEnum;
use ottr_core::analysis::{
    compare_updates, exact_advantage, verify_lemma1, verify_theorem3, verify_theorem4, verify_theorem5, RunTrace,
    TheoremReport,
};
use ottr_core::dual::DualProblem;
use ottr_core::estimation::exact_visitation;
use ottr_core::trainer::{RunLog, TrainConfig};
use ottr_core::{EnvSpec, PolicyTable};

use crate::error::{CliError, CliResult};
use crate::io::{read_json, read_text, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    /// SPO plans approach the uniform-tie WPO plan as lambda grows.
    Lemma1,
    /// Sinkhorn dual objective stays within its envelope of the Wasserstein one.
    T3,
    /// Performance improvement bound at every recorded update.
    T4,
    /// Contraction of the optimality gap.
    T5,
    /// Exact WPO reaches an optimal policy no later than exact KL.
    GridCompare,
}

impl Theorem {
    fn slug(self) -> &'static str {
        match self {
            Theorem::Lemma1 => "lemma1",
            Theorem::T3 => "t3",
            Theorem::T4 => "t4",
            Theorem::T5 => "t5",
            Theorem::GridCompare => "grid-compare",
        }
    }
}

const LEMMA1_LAMBDAS: [f64; 6] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e6];

struct Run {
    config: TrainConfig,
    env: EnvSpec,
    policy: PolicyTable,
    dir: std::path::PathBuf,
}

impl Run {
    fn load(dir: &Path) -> CliResult<Self> {
        let config = TrainConfig::parse(&read_text(&dir.join("config.toml"))?)?;
        let env = config.env_spec()?;
        let policy = read_json(&dir.join("policy.json"))?;
        Ok(Self {
            config,
            env,
            policy,
            dir: dir.to_path_buf(),
        })
    }

    fn trace(&self) -> CliResult<RunTrace> {
        let path = self.dir.join("trace.json");
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "{} has no trace.json; train with trace = true",
                self.dir.display()
            )));
        }
        read_json(&path)
    }

    /// The dual problem at the run's final policy with exact advantages and visitation.
    fn final_problem(&self) -> CliResult<DualProblem> {
        let mdp = &self.env.mdp;
        let a = exact_advantage(mdp, &self.policy)?;
        let rho = exact_visitation(mdp, &self.policy)?;
        let d = self.config.cost_matrix(&self.env)?;
        Ok(DualProblem::new(a, self.policy.clone(), rho, d, self.config.delta)?)
    }

    /// The last positive multiplier in the log, or 1.
    fn last_beta(&self) -> CliResult<f64> {
        let log = RunLog::from_csv(&read_text(&self.dir.join("log.csv"))?)?;
        Ok(log
            .records
            .iter()
            .rev()
            .map(|r| r.beta)
            .find(|&b| b > 0.0)
            .unwrap_or(1.0))
    }
}

fn report(run: &Run, theorem: Theorem, lambda: f64, delta: f64) -> CliResult<TheoremReport> {
    let mdp = &run.env.mdp;
    Ok(match theorem {
        Theorem::Lemma1 => {
            let a = exact_advantage(mdp, &run.policy)?;
            let d = run.config.cost_matrix(&run.env)?;
            verify_lemma1(&run.policy, &a, run.last_beta()?, &d, &LEMMA1_LAMBDAS)?
        }
        Theorem::T3 => verify_theorem3(&run.final_problem()?, lambda, 200)?,
        Theorem::T4 => verify_theorem4(mdp, &run.trace()?)?,
        Theorem::T5 => verify_theorem5(mdp, &run.trace()?)?,
        Theorem::GridCompare => {
            let init = match run.trace() {
                Ok(t) => t.policies[0].clone(),
                Err(_) => PolicyTable::uniform(run.env.n_states(), run.env.n_actions()),
            };
            compare_updates(&run.env, delta, run.config.iterations, &init)?.report
        }
    })
}

/// Returns whether every check passed.
pub fn run(dir: &Path, theorem: Theorem, lambda: f64, delta: f64, report_path: Option<&Path>) -> CliResult<bool> {
    let run = Run::load(dir)?;
    let report = report(&run, theorem, lambda, delta)?;
    let path = report_path.map_or_else(|| dir.join(format!("verify_{}.json", theorem.slug())), Path::to_path_buf);
    write_json(&path, &report)?;
    println!("{}", report.summary());
    Ok(report.pass)
}
