use serde::{Deserialize, Serialize};

use super::{solve_sinkhorn_dual, solve_wasserstein_dual, DualProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaScheduleKind {
    /// Solve the dual at every iteration.
    Optimal,
    /// Optimal for `k < k_beta`, then `beta_ref ln(k_beta + 2) / ln(k + 2)`.
    /// A missing `k_beta` is filled in by [`BetaSchedule::with_default_k_beta`].
    OptimalThenDecay {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_beta: Option<usize>,
    },
    /// Optimal for `k < k_beta`, then frozen.
    OptimalThenFix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_beta: Option<usize>,
    },
    /// `c / ln(k + 2)`.
    Decay,
    /// The same `beta` forever.
    Constant { beta: f64 },
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    #[serde(flatten)]
    pub kind: BetaScheduleKind,
    /// Decay scale, also the fallback reference when no optimal value exists yet.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_optimal: Option<f64>,
}

impl BetaSchedule {
    pub fn new(kind: BetaScheduleKind) -> Self {
        Self {
            kind,
            c: 1.0,
            history: Vec::new(),
            last_optimal: None,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn decay(c: f64) -> Self {
        Self::new(BetaScheduleKind::Decay).with_c(c)
    }

    pub fn optimal_then_decay(k_beta: usize) -> Self {
        Self::new(BetaScheduleKind::OptimalThenDecay { k_beta: Some(k_beta) })
    }

    pub fn optimal_then_fix(k_beta: usize) -> Self {
        Self::new(BetaScheduleKind::OptimalThenFix { k_beta: Some(k_beta) })
    }

    /// Fills an unset `k_beta`.
    pub fn with_default_k_beta(mut self, default: usize) -> Self {
        match &mut self.kind {
            BetaScheduleKind::OptimalThenDecay { k_beta } | BetaScheduleKind::OptimalThenFix { k_beta } => {
                k_beta.get_or_insert(default);
            }
            _ => {}
        }
        self
    }

    /// The hand-off iteration, if this kind has one.
    pub fn k_beta(&self) -> Option<usize> {
        match self.kind {
            BetaScheduleKind::OptimalThenDecay { k_beta } | BetaScheduleKind::OptimalThenFix { k_beta } => k_beta,
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(Error::InvalidConfig(format!("decay scale {} must be nonnegative", self.c)));
        }
        if let BetaScheduleKind::Constant { beta } = self.kind {
            if !beta.is_finite() || beta < 0.0 {
                return Err(Error::NegativeBeta(beta));
            }
        }
        Ok(())
    }

    /// Whether iteration `k` solves a dual.
    pub fn needs_problem(&self, k: usize) -> bool {
        match self.kind {
            BetaScheduleKind::Optimal => true,
            BetaScheduleKind::OptimalThenDecay { k_beta } | BetaScheduleKind::OptimalThenFix { k_beta } => {
                k_beta.is_none_or(|kb| k < kb)
            }
            BetaScheduleKind::Decay | BetaScheduleKind::Constant { .. } => false,
        }
    }

    pub fn last_optimal(&self) -> Option<f64> {
        self.last_optimal
    }

    /// Multiplier for iteration `k`. Optimal kinds solve the entropic dual when `lambda` is
    /// given and the Wasserstein dual otherwise.
    pub fn next_beta(&mut self, k: usize, problem: Option<&DualProblem>, lambda: Option<f64>) -> Result<f64> {
        self.next_beta_with(k, || {
            let p = problem.ok_or(Error::MissingProblem)?;
            let sol = match lambda {
                Some(l) => solve_sinkhorn_dual(p, l)?,
                None => solve_wasserstein_dual(p)?,
            };
            Ok(sol.beta_star)
        })
    }

    /// Like [`BetaSchedule::next_beta`] with a caller-supplied dual solver.
    pub fn next_beta_with(&mut self, k: usize, solve: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let reference = self.last_optimal.unwrap_or(self.c);
        let beta = if self.needs_problem(k) {
            let b = solve()?;
            self.last_optimal = Some(b);
            b
        } else {
            match self.kind {
                BetaScheduleKind::OptimalThenDecay { k_beta } => {
                    let kb = k_beta.unwrap_or(k);
                    reference * ((kb + 2) as f64).ln() / ((k + 2) as f64).ln()
                }
                BetaScheduleKind::OptimalThenFix { .. } => reference,
                BetaScheduleKind::Decay => self.c / ((k + 2) as f64).ln(),
                BetaScheduleKind::Constant { beta } => beta,
                BetaScheduleKind::Optimal => unreachable!("optimal always solves"),
            }
        };
        self.history.push(beta);
        Ok(beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostMatrix;
    use crate::policy::PolicyTable;
    use crate::table::ActionTable;

    fn problem() -> DualProblem {
        DualProblem::new(
            ActionTable::from_rows(vec![vec![1.0, 0.2, -0.5]]).unwrap(),
            PolicyTable::from_rows(vec![vec![0.5, 0.3, 0.2]]).unwrap(),
            vec![1.0],
            CostMatrix::zero_one(3),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn decay_is_nonincreasing() {
        let mut s = BetaSchedule::decay(2.0);
        let betas: Vec<f64> = (0..100).map(|k| s.next_beta(k, None, None).unwrap()).collect();
        assert!(betas.windows(2).all(|w| w[1] <= w[0]));
        assert!((betas[0] - 2.0 / 2f64.ln()).abs() < 1e-15);
        assert_eq!(s.history.len(), 100);
    }

    #[test]
    fn optimal_needs_a_problem() {
        let mut s = BetaSchedule::new(BetaScheduleKind::Optimal);
        assert_eq!(s.next_beta(0, None, None).unwrap_err(), Error::MissingProblem);
        assert_eq!(s.next_beta(0, Some(&problem()), None).unwrap(), 1.5);
    }

    #[test]
    fn fix_freezes_and_decay_continues() {
        let p = problem();
        let mut fix = BetaSchedule::optimal_then_fix(3);
        let mut decay = BetaSchedule::optimal_then_decay(3);
        for k in 0..3 {
            fix.next_beta(k, Some(&p), None).unwrap();
            decay.next_beta(k, Some(&p), None).unwrap();
        }
        let last = decay.last_optimal().unwrap();
        assert_eq!(decay.next_beta(3, None, None).unwrap(), last);
        assert!(decay.next_beta(4, None, None).unwrap() < last);
        for k in 3..20 {
            assert_eq!(fix.next_beta(k, None, None).unwrap(), fix.last_optimal().unwrap());
        }
    }

    #[test]
    fn lambda_selects_entropic_dual() {
        let mut s = BetaSchedule::new(BetaScheduleKind::Optimal);
        let b = s.next_beta(0, Some(&problem()), Some(5.0)).unwrap();
        assert_eq!(b, solve_sinkhorn_dual(&problem(), 5.0).unwrap().beta_star);
    }

    #[test]
    fn serde_round_trip() {
        let s = BetaSchedule::optimal_then_decay(7).with_c(0.5);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"optimal_then_decay\""));
        let back: BetaSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let parsed: BetaSchedule = serde_json::from_str(r#"{"kind":"decay"}"#).unwrap();
        assert_eq!(parsed.c, 1.0);
        let open: BetaSchedule = serde_json::from_str(r#"{"kind":"optimal_then_fix"}"#).unwrap();
        assert_eq!(open.k_beta(), None);
        assert_eq!(open.with_default_k_beta(4).k_beta(), Some(4));
    }
}
