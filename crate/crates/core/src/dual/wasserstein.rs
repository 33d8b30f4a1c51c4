use super::{DualMethod, DualProblem, DualSolution};
use crate::error::{Error, Result};
use crate::updates::{tie_set, wpo_update, TieRule};

/// Above this many `candidates * S * N^2` operations the minimizer is found by bisection.
const EXHAUSTIVE_BUDGET: usize = 10_000_000;

/// `F(beta) = beta * delta + sum_s rho_s sum_j pi_j max_i (A_si - beta D_ij)`.
pub fn wasserstein_dual_objective(p: &DualProblem, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::NegativeBeta(beta));
    }
    Ok(objective(p, beta))
}

pub(crate) fn objective(p: &DualProblem, beta: f64) -> f64 {
    let (d, n) = (p.cost(), p.n_actions());
    let mut total = 0.0;
    for (s, &w) in p.rho().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let a = p.advantage().row(s);
        let mut inner = 0.0;
        for j in 0..n {
            let pj = p.old_policy().prob(s, j);
            if pj == 0.0 {
                continue;
            }
            let best = (0..n)
                .map(|i| a[i] - beta * d.get(i, j))
                .fold(f64::NEG_INFINITY, f64::max);
            inner += pj * best;
        }
        total += w * inner;
    }
    beta * p.delta() + total
}

/// `max_{s, k != j} (A_sk - A_sj) / D_kj` over pairs with positive cost, floored at zero.
pub fn beta_bar(p: &DualProblem) -> Result<f64> {
    let (d, n) = (p.cost(), p.n_actions());
    if (0..n).all(|i| (0..n).all(|j| d.get(i, j) == 0.0)) {
        return Err(Error::DegenerateProblem);
    }
    let mut bar = 0.0f64;
    for s in 0..p.n_states() {
        let a = p.advantage().row(s);
        for k in 0..n {
            for j in 0..n {
                if k != j && d.get(k, j) > 0.0 {
                    bar = bar.max((a[k] - a[j]) / d.get(k, j));
                }
            }
        }
    }
    Ok(bar)
}

/// Sorted, deduplicated kinks of `F` inside `[0, beta_bar]`, including both endpoints.
pub fn breakpoint_candidates(p: &DualProblem) -> Result<Vec<f64>> {
    let bar = beta_bar(p)?;
    let (d, n) = (p.cost(), p.n_actions());
    let mut out = vec![0.0, bar];
    for s in 0..p.n_states() {
        if p.rho()[s] == 0.0 {
            continue;
        }
        let a = p.advantage().row(s);
        for j in 0..n {
            if p.old_policy().prob(s, j) == 0.0 {
                continue;
            }
            for i in 0..n {
                for k in i + 1..n {
                    let dd = d.get(i, j) - d.get(k, j);
                    if dd != 0.0 {
                        let b = (a[i] - a[k]) / dd;
                        if b > 0.0 && b < bar {
                            out.push(b);
                        }
                    }
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Smallest and largest weighted transport cost among optimal tie splits at `beta`.
/// These are the one-sided slopes `delta - max` (left) and `delta - min` (right) of `F`.
pub(crate) fn tie_cost_range(p: &DualProblem, beta: f64) -> (f64, f64) {
    let (d, n) = (p.cost(), p.n_actions());
    let (mut lo, mut hi) = (0.0, 0.0);
    for (s, &w) in p.rho().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let a = p.advantage().row(s);
        for j in 0..n {
            let pj = p.old_policy().prob(s, j);
            if pj == 0.0 {
                continue;
            }
            let set = tie_set(a, beta, d, j);
            let costs = set.iter().map(|&i| d.get(i, j));
            lo += w * pj * costs.clone().fold(f64::INFINITY, f64::min);
            hi += w * pj * costs.fold(0.0, f64::max);
        }
    }
    (lo, hi)
}

/// Exact minimizer of the piecewise-linear convex dual. Returns the smallest optimal `beta`,
/// i.e. the first breakpoint whose right slope `delta - min_cost` is nonnegative.
pub fn solve_wasserstein_dual(p: &DualProblem) -> Result<DualSolution> {
    let candidates = breakpoint_candidates(p)?;
    let tol = 1e-12 * (1.0 + p.delta());
    let feasible = |b: f64| tie_cost_range(p, b).0 <= p.delta() + tol;
    let work = candidates.len() * p.n_states() * p.n_actions() * p.n_actions();
    let (index, evaluations) = if work <= EXHAUSTIVE_BUDGET {
        let index = candidates
            .iter()
            .position(|&b| feasible(b))
            .unwrap_or(candidates.len() - 1);
        (index, index + 1)
    } else {
        // min tie cost is nonincreasing in beta, so feasibility is monotone
        let (mut lo, mut hi) = (0usize, candidates.len() - 1);
        let mut evaluations = 0;
        while lo < hi {
            let mid = (lo + hi) / 2;
            evaluations += 1;
            if feasible(candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (lo, evaluations)
    };
    let beta_star = candidates[index];
    finish(p, beta_star, DualMethod::Breakpoint, evaluations)
}

/// Fills the diagnostics for a Wasserstein multiplier using the LP tie split.
pub(crate) fn finish(
    p: &DualProblem,
    beta_star: f64,
    method: DualMethod,
    evaluations: usize,
) -> Result<DualSolution> {
    let rule = TieRule::Lp {
        rho: p.rho().to_vec(),
        delta: p.delta(),
    };
    let report = wpo_update(p.old_policy(), p.advantage(), beta_star, p.cost(), &rule)?;
    let constraint_value = report.weighted_distance(p.rho());
    Ok(DualSolution {
        beta_star,
        objective: objective(p, beta_star),
        constraint_value,
        slack: p.delta() - constraint_value,
        method,
        evaluations,
    })
}
