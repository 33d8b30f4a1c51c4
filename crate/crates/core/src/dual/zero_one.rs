use super::wasserstein::{finish, objective};
use super::{DualMethod, DualProblem, DualSolution};
use crate::error::{Error, Result};

/// Per-state argmax and the gaps `A(s, k_s) - A(s, j)`.
struct Gaps {
    best: Vec<usize>,
    gaps: Vec<Vec<f64>>,
}

impl Gaps {
    fn new(p: &DualProblem) -> Self {
        let mut best = Vec::with_capacity(p.n_states());
        let mut gaps = Vec::with_capacity(p.n_states());
        for s in 0..p.n_states() {
            let a = p.advantage().row(s);
            let mut k = 0;
            for (i, &v) in a.iter().enumerate() {
                if v > a[k] {
                    k = i;
                }
            }
            best.push(k);
            gaps.push(a.iter().map(|&v| a[k] - v).collect());
        }
        Self { best, gaps }
    }

    fn max_gap(&self) -> f64 {
        self.gaps.iter().flatten().copied().fold(0.0, f64::max)
    }

    fn min_gap(&self) -> f64 {
        let mut out = f64::INFINITY;
        for (s, row) in self.gaps.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if j != self.best[s] {
                    out = out.min(g);
                }
            }
        }
        out
    }
}

fn check(p: &DualProblem, beta0: f64) -> Result<()> {
    if !p.cost().is_zero_one() {
        return Err(Error::WrongCostPreset);
    }
    if beta0.is_nan() || beta0 < 0.0 {
        return Err(Error::NegativeBeta(beta0));
    }
    Ok(())
}

fn local(p: &DualProblem, g: &Gaps, beta0: f64) -> f64 {
    let g_max = g.max_gap();
    if beta0 >= g_max {
        return g_max;
    }
    let g_min = g.min_gap();
    if beta0 <= g_min {
        let moved: f64 = (0..p.n_states())
            .map(|s| p.rho()[s] * (1.0 - p.old_policy().prob(s, g.best[s])))
            .sum();
        return if p.delta() - moved < 0.0 { g_min } else { 0.0 };
    }
    // split actions into gaps already covered by beta0 (I1) and the rest (I2)
    let mut outside_mass = 0.0;
    let mut below = 0.0f64;
    let mut above = f64::INFINITY;
    for (s, row) in g.gaps.iter().enumerate() {
        for (j, &gap) in row.iter().enumerate() {
            if beta0 >= gap {
                below = below.max(gap);
            } else {
                above = above.min(gap);
                outside_mass += p.rho()[s] * p.old_policy().prob(s, j);
            }
        }
    }
    if p.delta() - outside_mass < 0.0 {
        above
    } else {
        below
    }
}

/// Local optimum of the zero-one dual on the piece of `[0, inf)` that contains `beta0`.
pub fn solve_zero_one_dual(p: &DualProblem, beta0: f64) -> Result<DualSolution> {
    check(p, beta0)?;
    let beta = local(p, &Gaps::new(p), beta0);
    finish(p, beta, DualMethod::ZeroOneLocal, 1)
}

/// Runs the local search from every piece between consecutive gaps and keeps the best.
/// Ties in the objective go to the smaller multiplier.
pub fn solve_zero_one_dual_global(p: &DualProblem) -> Result<DualSolution> {
    check(p, 0.0)?;
    let g = Gaps::new(p);
    let mut levels: Vec<f64> = g.gaps.iter().flatten().copied().collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut starts = vec![0.0];
    starts.extend(levels.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    starts.push(g.max_gap());

    let mut best: Option<(f64, f64)> = None;
    for &b0 in &starts {
        let beta = local(p, &g, b0);
        let f = objective(p, beta);
        let tol = 1e-12 * (1.0 + f.abs());
        best = match best {
            Some((bf, bb)) if bf < f - tol || (f - bf).abs() <= tol && bb <= beta => Some((bf, bb)),
            _ => Some((f, beta)),
        };
    }
    let (_, beta) = best.expect("at least one start");
    finish(p, beta, DualMethod::ZeroOneMultiStart, starts.len())
}
