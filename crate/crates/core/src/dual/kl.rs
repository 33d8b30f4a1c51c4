use super::{DualMethod, DualProblem, DualSolution};
use crate::error::Result;
use crate::updates::kl_update;

/// Target accuracy of the bisection on `E_rho KL`.
pub const KL_TOLERANCE: f64 = 1e-6;
const MAX_BISECTIONS: usize = 300;

/// `sum_s rho_s KL(new_s || old_s)` after an exponential-weights step at `beta`.
pub fn expected_kl(p: &DualProblem, beta: f64) -> Result<f64> {
    Ok(kl_update(p.old_policy(), p.advantage(), beta)?.weighted_distance(p.rho()))
}

fn kl_dual_objective(p: &DualProblem, beta: f64) -> f64 {
    let mut total = beta * p.delta();
    for (s, &w) in p.rho().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let a = p.advantage().row(s);
        let row = p.old_policy().row(s);
        let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..a.len()).map(|i| row.get(i) * ((a[i] - m) / beta).exp()).sum();
        total += w * (m + beta * z.ln());
    }
    total
}

/// Temperature of the exponential-weights step whose expected KL equals `delta`.
/// If even the smallest temperature stays inside the ball, that temperature is returned.
pub fn solve_kl_multiplier(p: &DualProblem) -> Result<DualSolution> {
    let floor = super::beta_floor(p);
    let mut evaluations = 1;
    let at_floor = expected_kl(p, floor)?;
    let beta_star = if at_floor <= p.delta() {
        floor
    } else {
        let mut hi = p.a_max().max(floor);
        while expected_kl(p, hi)? > p.delta() {
            evaluations += 1;
            hi *= 2.0;
        }
        let mut lo = floor;
        let mut beta = hi;
        for _ in 0..MAX_BISECTIONS {
            let mid = (lo * hi).sqrt();
            evaluations += 1;
            let kl = expected_kl(p, mid)?;
            beta = mid;
            if (kl - p.delta()).abs() <= KL_TOLERANCE || hi / lo - 1.0 <= 1e-15 {
                break;
            }
            if kl > p.delta() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        beta
    };
    let constraint_value = expected_kl(p, beta_star)?;
    Ok(DualSolution {
        beta_star,
        objective: kl_dual_objective(p, beta_star),
        constraint_value,
        slack: p.delta() - constraint_value,
        method: DualMethod::KlBisection,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostMatrix;
    use crate::policy::PolicyTable;
    use crate::rng::Rng;
    use crate::table::ActionTable;

    #[test]
    fn hits_the_radius() {
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let pi = PolicyTable::random(3, 4, &mut rng);
            let a = ActionTable::from_fn(3, 4, |_, _| rng.range(-2.0, 2.0));
            let p = DualProblem::new(a, pi, vec![0.5, 0.3, 0.2], CostMatrix::zero_one(4), 0.05).unwrap();
            let sol = solve_kl_multiplier(&p).unwrap();
            assert!((sol.constraint_value - 0.05).abs() <= 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn objective_matches_lagrangian() {
        let mut rng = Rng::new(3);
        let pi = PolicyTable::random(2, 3, &mut rng);
        let a = ActionTable::from_fn(2, 3, |_, _| rng.range(-1.0, 1.0));
        let p = DualProblem::new(a, pi, vec![0.6, 0.4], CostMatrix::zero_one(3), 0.1).unwrap();
        let beta = 0.8;
        let report = kl_update(p.old_policy(), p.advantage(), beta).unwrap();
        let mut lagrangian = beta * p.delta();
        for s in 0..2 {
            let gain: f64 = (0..3)
                .map(|i| report.new_policy.prob(s, i) * p.advantage().get(s, i))
                .sum();
            lagrangian += p.rho()[s] * (gain - beta * report.plan_costs[s]);
        }
        assert!((kl_dual_objective(&p, beta) - lagrangian).abs() < 1e-12);
    }

    #[test]
    fn loose_radius_uses_floor() {
        let p = DualProblem::new(
            ActionTable::from_rows(vec![vec![1.0, 0.0]]).unwrap(),
            PolicyTable::uniform(1, 2),
            vec![1.0],
            CostMatrix::zero_one(2),
            5.0,
        )
        .unwrap();
        assert_eq!(solve_kl_multiplier(&p).unwrap().beta_star, crate::dual::beta_floor(&p));
    }
}
