use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::dual::BetaSchedule;
use crate::envs::{self, EnvSpec};
use crate::error::{Error, Result};
use crate::estimation::AdvantageMethod;
use crate::updates::UpdateKind;

pub const SCHEMA_VERSION: u32 = 1;

/// Entropic weight per iteration for SPO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Constant { lambda: f64 },
    /// `lambda0 * rate^k`.
    Homotopy {
        lambda0: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    /// `values[k]`, repeating the last entry.
    List { values: Vec<f64> },
}

fn default_rate() -> f64 {
    1.05
}

impl LambdaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            LambdaSchedule::Constant { lambda } => *lambda,
            LambdaSchedule::Homotopy { lambda0, rate } => lambda0 * rate.powi(k.min(i32::MAX as usize) as i32),
            LambdaSchedule::List { values } => values[k.min(values.len() - 1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            LambdaSchedule::Constant { lambda } => *lambda > 0.0 && lambda.is_finite(),
            LambdaSchedule::Homotopy { lambda0, rate } => *lambda0 > 0.0 && *rate >= 1.0 && rate.is_finite(),
            LambdaSchedule::List { values } => !values.is_empty() && values.iter().all(|l| *l > 0.0 && l.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid lambda schedule {self:?}")))
        }
    }
}

/// Where advantages come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageMode {
    #[default]
    Sampled,
    Exact,
}

/// State weights for the dual and the LP tie split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSource {
    #[default]
    Exact,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPolicy {
    #[default]
    Uniform,
    Random,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_value_lr() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

fn default_advantage() -> AdvantageMethod {
    AdvantageMethod::MonteCarlo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_schema", alias = "spec_version")]
    pub schema_version: u32,
    pub env: String,
    /// Overrides the environment's discount.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Overrides the environment's action distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostMatrix>,
    pub update: UpdateKind,
    pub beta_schedule: BetaSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_schedule: Option<LambdaSchedule>,
    pub iterations: usize,
    pub episodes_per_iter: usize,
    #[serde(default = "default_advantage")]
    pub advantage: AdvantageMethod,
    #[serde(default = "default_value_lr")]
    pub value_lr: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a_cap: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub advantage_mode: AdvantageMode,
    #[serde(default)]
    pub rho_source: RhoSource,
    #[serde(default)]
    pub initial_policy: InitialPolicy,
    /// Log exact `J` and the optimality gap each iteration.
    #[serde(default = "default_true")]
    pub exact_metrics: bool,
    /// Fill the `wall_ms` column; leaves the log nondeterministic.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Keep every iterate for theorem checks.
    #[serde(default)]
    pub trace: bool,
}

impl TrainConfig {
    /// A config with the defaults used throughout the examples.
    pub fn new(env: &str, update: UpdateKind, beta_schedule: BetaSchedule, iterations: usize, episodes_per_iter: usize, delta: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            env: env.to_string(),
            gamma: None,
            cost: None,
            update,
            beta_schedule,
            lambda_schedule: None,
            iterations,
            episodes_per_iter,
            advantage: default_advantage(),
            value_lr: default_value_lr(),
            delta,
            n_a_cap: None,
            seed: 0,
            advantage_mode: AdvantageMode::Sampled,
            rho_source: RhoSource::Exact,
            initial_policy: InitialPolicy::Uniform,
            exact_metrics: true,
            record_wall_time: false,
            trace: false,
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let parsed: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        parsed.validate()?;
        Ok(parsed)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// The environment with any discount override applied.
    pub fn env_spec(&self) -> Result<EnvSpec> {
        let env = envs::by_name(&self.env)?;
        match self.gamma {
            Some(g) => env.with_gamma(g),
            None => Ok(env),
        }
    }

    pub fn cost_matrix(&self, env: &EnvSpec) -> Result<CostMatrix> {
        let d = match &self.cost {
            Some(d) => d.clone(),
            None => env.cost()?,
        };
        if d.n() != env.n_actions() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix over {} actions for an environment with {}",
                d.n(),
                env.n_actions()
            )));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.episodes_per_iter == 0 {
            return Err(Error::InvalidConfig("episodes_per_iter must be at least 1".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidConfig(format!("delta {} must be positive", self.delta)));
        }
        if !(self.value_lr > 0.0) || !self.value_lr.is_finite() {
            return Err(Error::InvalidConfig(format!("value_lr {} must be positive", self.value_lr)));
        }
        if self.n_a_cap == Some(0) {
            return Err(Error::InvalidConfig("n_a_cap must be at least 1".into()));
        }
        self.advantage.validate()?;
        self.beta_schedule.validate()?;
        match (&self.update, &self.lambda_schedule) {
            (UpdateKind::Spo, None) => {
                return Err(Error::InvalidConfig("spo updates need a lambda_schedule".into()))
            }
            (_, Some(l)) => l.validate()?,
            _ => {}
        }
        let env = self.env_spec()?;
        self.cost_matrix(&env)?;
        Ok(())
    }

    /// Copy with every default made explicit, including `k_beta`.
    pub fn resolved(&self) -> Result<Self> {
        let env = self.env_spec()?;
        let k_beta = env
            .default_k_beta()
            .unwrap_or_else(|| (self.iterations / 5).max(1));
        let mut out = self.clone();
        out.beta_schedule = self.beta_schedule.clone().with_default_k_beta(k_beta);
        out.gamma = Some(env.mdp.gamma());
        if out.cost.is_none() {
            out.cost = Some(env.cost()?);
        }
        Ok(out)
    }
}
