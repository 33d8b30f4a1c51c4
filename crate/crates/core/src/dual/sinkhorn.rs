use super::{DualMethod, DualProblem, DualSolution};
use crate::error::{Error, Result};

const STARTS: usize = 8;
const GRADIENT_TOLERANCE: f64 = 1e-8;
const STEP_TOLERANCE: f64 = 1e-12;
const MAX_DESCENT_STEPS: usize = 2000;
const ARMIJO: f64 = 1e-4;
const POLISH_STEPS: usize = 200;

/// Value and derivative of the entropic dual at one `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornDualValue {
    pub value: f64,
    pub gradient: f64,
}

/// Smallest multiplier the solver will consider.
pub fn beta_floor(p: &DualProblem) -> f64 {
    (1e-8 * p.a_max()).max(1e-12)
}

/// `2 A_max / delta`, scaled by the total state weight when it exceeds one.
pub fn sinkhorn_beta_upper_bound(p: &DualProblem) -> f64 {
    2.0 * p.a_max() * p.mass().max(1.0) / p.delta()
}

/// `F_lambda(beta) = beta delta + sum_s rho_s sum_j pi_j (beta / lambda) (LSE_j - ln pi_j)`
/// with `LSE_j = ln sum_i exp(lambda A_i / beta - lambda D_ij)`.
pub fn sinkhorn_dual_objective(p: &DualProblem, beta: f64, lambda: f64) -> Result<SinkhornDualValue> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::NonPositiveBeta(beta));
    }
    Ok(evaluate(p, beta, lambda))
}

fn evaluate(p: &DualProblem, beta: f64, lambda: f64) -> SinkhornDualValue {
    let (d, n) = (p.cost(), p.n_actions());
    let mut logits = vec![0.0; n];
    let (mut value, mut gradient) = (beta * p.delta(), p.delta());
    for (s, &w) in p.rho().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let a = p.advantage().row(s);
        let (mut v, mut g) = (0.0, 0.0);
        for j in 0..n {
            let pj = p.old_policy().prob(s, j);
            if pj == 0.0 {
                continue;
            }
            for i in 0..n {
                logits[i] = lambda * a[i] / beta - lambda * d.get(i, j);
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (mut z, mut za) = (0.0, 0.0);
            for i in 0..n {
                let e = (logits[i] - m).exp();
                z += e;
                za += e * a[i];
            }
            let lse = m + z.ln();
            let inner = lse - pj.ln();
            v += pj * beta / lambda * inner;
            g += pj * (inner / lambda - za / z / beta);
        }
        value += w * v;
        gradient += w * g;
    }
    SinkhornDualValue { value, gradient }
}

struct Search<'a> {
    p: &'a DualProblem,
    lambda: f64,
    lo: f64,
    hi: f64,
    evaluations: usize,
}

impl Search<'_> {
    fn eval(&mut self, beta: f64) -> SinkhornDualValue {
        self.evaluations += 1;
        evaluate(self.p, beta, self.lambda)
    }

    /// Projected gradient descent with Armijo backtracking.
    fn descend(&mut self, mut beta: f64) -> (f64, f64) {
        let mut cur = self.eval(beta);
        let mut step = 0.1 * (self.hi - self.lo) / cur.gradient.abs().max(1e-300);
        for _ in 0..MAX_DESCENT_STEPS {
            if cur.gradient.abs() <= GRADIENT_TOLERANCE {
                break;
            }
            let mut accepted = false;
            while step * cur.gradient.abs() > STEP_TOLERANCE * beta.max(1.0) {
                let trial = (beta - step * cur.gradient).clamp(self.lo, self.hi);
                let moved = beta - trial;
                if moved.abs() <= STEP_TOLERANCE {
                    break;
                }
                let next = self.eval(trial);
                if next.value <= cur.value - ARMIJO * cur.gradient * moved {
                    beta = trial;
                    cur = next;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (beta, cur.value)
    }

    /// Bisection on the sign of the monotone derivative.
    fn bisect(&mut self) -> f64 {
        if self.eval(self.lo).gradient >= 0.0 {
            return self.lo;
        }
        if self.eval(self.hi).gradient <= 0.0 {
            return self.hi;
        }
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..POLISH_STEPS {
            let m = 0.5 * (a + b);
            if b - a <= STEP_TOLERANCE * b.max(1.0) {
                break;
            }
            if self.eval(m).gradient < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Global minimizer of the entropic dual over `[beta_floor, sinkhorn_beta_upper_bound]`.
pub fn solve_sinkhorn_dual(p: &DualProblem, lambda: f64) -> Result<DualSolution> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    if !(p.delta() > 0.0) {
        return Err(Error::InvalidProblem("the entropic dual needs a positive radius".into()));
    }
    let lo = beta_floor(p);
    let hi = sinkhorn_beta_upper_bound(p).max(lo);
    let mut search = Search {
        p,
        lambda,
        lo,
        hi,
        evaluations: 0,
    };
    let mut best = (lo, f64::INFINITY);
    if hi > lo {
        let ratio = (hi / lo).ln();
        for k in 1..=STARTS {
            let start = lo * (ratio * k as f64 / STARTS as f64).exp();
            let found = search.descend(start.min(hi));
            if found.1 < best.1 {
                best = found;
            }
        }
        let polished = search.bisect();
        let value = search.eval(polished).value;
        if value <= best.1 {
            best = (polished, value);
        }
    }
    let beta_star = best.0;
    let at = search.eval(beta_star);
    let constraint_value = p.delta() - at.gradient;
    Ok(DualSolution {
        beta_star,
        objective: at.value,
        constraint_value,
        slack: p.delta() - constraint_value,
        method: DualMethod::SinkhornDescent,
        evaluations: search.evaluations,
    })
}
