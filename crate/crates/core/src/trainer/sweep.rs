use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::log::RunSummary;
use super::run::{train, TrainFailure};
use crate::dual::BetaSchedule;
use crate::error::{Error, Result};

/// The hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Values 1 to 4 select the multiplier strategies of the ablation.
    BetaSetting,
    Lambda,
    NACap,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "beta_setting" | "beta" => Ok(SweepAxis::BetaSetting),
            "lambda" => Ok(SweepAxis::Lambda),
            "n_a_cap" | "n_a" | "na" => Ok(SweepAxis::NACap),
            _ => Err(Error::InvalidConfig(format!("unknown sweep axis {s:?}"))),
        }
    }
}

/// Multiplier strategy `setting` (1 to 4): optimal throughout, optimal for the first 20% then
/// decaying, optimal for the first 20% then frozen, decaying throughout.
pub fn beta_setting(setting: usize, iterations: usize, c: f64) -> Result<BetaSchedule> {
    let k_beta = (iterations / 5).max(1);
    Ok(match setting {
        1 => BetaSchedule::new(crate::dual::BetaScheduleKind::Optimal),
        2 => BetaSchedule::optimal_then_decay(k_beta),
        3 => BetaSchedule::optimal_then_fix(k_beta),
        4 => BetaSchedule::decay(c),
        _ => return Err(Error::InvalidConfig(format!("beta setting {setting} is not one of 1-4"))),
    }
    .with_c(c))
}

fn apply(base: &TrainConfig, axis: SweepAxis, value: f64, seed: u64) -> Result<TrainConfig> {
    let mut c = base.clone();
    c.seed = seed;
    match axis {
        SweepAxis::BetaSetting => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::InvalidConfig(format!("beta setting {value} is not an integer")));
            }
            c.beta_schedule = beta_setting(value as usize, c.iterations, base.beta_schedule.c)?;
        }
        SweepAxis::Lambda => c.lambda_schedule = Some(super::LambdaSchedule::Constant { lambda: value }),
        SweepAxis::NACap => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::InvalidConfig(format!("n_a_cap {value} is not a positive integer")));
            }
            c.n_a_cap = Some(value as usize);
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub summary: RunSummary,
    /// Batch return per iteration.
    pub curve: Vec<f64>,
}

/// Across-seed statistics for one value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub value: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub median_final_return: f64,
    pub median_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Trains every `(value, seed)` pair on a pool of `jobs` threads (all cores when `None`).
/// Rows come back ordered by value, then seed.
pub fn sweep(
    base: &TrainConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    jobs: Option<usize>,
) -> std::result::Result<SweepResult, TrainFailure> {
    let fail = |error: Error| TrainFailure {
        error,
        log: Default::default(),
        trace: None,
    };
    if values.is_empty() || seeds.is_empty() {
        return Err(fail(Error::InvalidConfig("a sweep needs at least one value and one seed".into())));
    }
    let mut jobs_list = Vec::new();
    for &v in values {
        for &s in seeds {
            jobs_list.push((v, s, apply(base, axis, v, s).map_err(fail)?));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| fail(Error::InvalidConfig(e.to_string())))?;
    let outputs: Vec<_> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|(v, s, c)| train(c).map(|o| (*v, *s, o)))
            .collect()
    });
    let mut rows = Vec::with_capacity(outputs.len());
    for out in outputs {
        let (value, seed, o) = out?;
        rows.push(SweepRow {
            value,
            seed,
            curve: o.log.sampled_returns(),
            summary: o.summary,
        });
    }
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)));
    let mut aggregates = Vec::new();
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    for v in distinct {
        let group: Vec<&SweepRow> = rows.iter().filter(|r| r.value == v).collect();
        let len = group.iter().map(|r| r.curve.len()).min().unwrap_or(0);
        let n = group.len() as f64;
        let mean: Vec<f64> = (0..len).map(|k| group.iter().map(|r| r.curve[k]).sum::<f64>() / n).collect();
        let std = (0..len)
            .map(|k| (group.iter().map(|r| (r.curve[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        aggregates.push(SweepAggregate {
            value: v,
            mean,
            std,
            median_final_return: median(group.iter().map(|r| r.summary.final_return).collect()),
            median_wall_ms: median(group.iter().map(|r| r.summary.total_wall_ms).collect()),
        });
    }
    Ok(SweepResult { axis, rows, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::updates::{TieRuleKind, UpdateKind};

    fn base() -> TrainConfig {
        TrainConfig::new("chain", UpdateKind::Wpo { tie_rule: TieRuleKind::Lp }, BetaSchedule::decay(1.0), 6, 1, 0.2)
    }

    #[test]
    fn single_cell_matches_train() {
        let b = base();
        let res = sweep(&b, SweepAxis::NACap, &[4.0], &[3], Some(2)).unwrap();
        let mut c = b.clone();
        c.seed = 3;
        c.n_a_cap = Some(4);
        let direct = train(&c).unwrap();
        assert_eq!(res.rows[0].curve, direct.log.sampled_returns());
        assert_eq!(res.aggregates[0].mean, res.rows[0].curve);
    }

    #[test]
    fn rows_are_ordered() {
        let res = sweep(&base(), SweepAxis::BetaSetting, &[4.0, 1.0], &[2, 0], Some(3)).unwrap();
        let keys: Vec<(f64, u64)> = res.rows.iter().map(|r| (r.value, r.seed)).collect();
        assert_eq!(keys, vec![(1.0, 0), (1.0, 2), (4.0, 0), (4.0, 2)]);
        assert_eq!(res.aggregates.len(), 2);
    }

    #[test]
    fn rejects_bad_axis_values() {
        assert!(sweep(&base(), SweepAxis::BetaSetting, &[5.0], &[0], None).is_err());
        assert!(sweep(&base(), SweepAxis::Lambda, &[], &[0], None).is_err());
        assert!("gamma".parse::<SweepAxis>().is_err());
    }
}
