use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of `log.csv`.
pub const LOG_COLUMNS: [&str; 9] = [
    "k",
    "beta",
    "lambda",
    "J_sampled",
    "J_exact",
    "vgap_inf",
    "tr_distance",
    "coverage",
    "wall_ms",
];

/// Metrics of iteration `k`: the policy `pi_k` that collected the batch, and the step it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub beta: f64,
    pub lambda: Option<f64>,
    /// Mean undiscounted return of the batch.
    #[serde(rename = "J_sampled")]
    pub j_sampled: f64,
    #[serde(rename = "J_exact")]
    pub j_exact: Option<f64>,
    pub vgap_inf: Option<f64>,
    /// `sum_s rho_s d(pi_{k+1}(.|s), pi_k(.|s))`.
    pub tr_distance: f64,
    /// Fraction of state-action pairs visited by the batch.
    pub coverage: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<IterationRecord>,
}

impl RunLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: IterationRecord) {
        debug_assert_eq!(record.k, self.records.len());
        self.records.push(record);
    }

    /// Batch returns in iteration order.
    pub fn sampled_returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.j_sampled).collect()
    }

    /// Mean batch return over the last `fraction` of iterations (at least one).
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return f64::NAN;
        }
        let take = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        self.records[n - take..].iter().map(|r| r.j_sampled).sum::<f64>() / take as f64
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(LOG_COLUMNS).map_err(io)?;
        }
        for r in &self.records {
            w.serialize(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let records = r.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(io)?;
        Ok(Self { records })
    }
}

fn io(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("log csv: {e}"))
}

/// Headline numbers of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub env: String,
    pub update: String,
    pub seed: u64,
    pub iterations: usize,
    /// Mean batch return over the last 10% of iterations.
    pub final_return: f64,
    pub final_j_exact: Option<f64>,
    pub final_vgap_inf: Option<f64>,
    pub mean_beta: f64,
    pub total_wall_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, j: f64) -> IterationRecord {
        IterationRecord {
            k,
            beta: 0.5,
            lambda: None,
            j_sampled: j,
            j_exact: Some(1.25),
            vgap_inf: None,
            tr_distance: 0.1,
            coverage: 1.0,
            wall_ms: None,
        }
    }

    #[test]
    fn csv_round_trip_with_blank_columns() {
        let log = RunLog {
            records: vec![record(0, -3.0), record(1, 2.5)],
        };
        let text = log.to_csv().unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, LOG_COLUMNS.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "0,0.5,,-3.0,1.25,,0.1,1.0,");
        assert_eq!(RunLog::from_csv(&text).unwrap(), log);
        assert_eq!(RunLog::default().to_csv().unwrap().trim(), LOG_COLUMNS.join(","));
    }

    #[test]
    fn tail_mean_uses_last_tenth() {
        let log = RunLog {
            records: (0..20).map(|k| record(k, k as f64)).collect(),
        };
        assert_eq!(log.tail_mean(0.1), 18.5);
    }
}
