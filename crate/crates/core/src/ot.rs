//! Discrete optimal transport: exact Wasserstein distance via the transportation simplex and
//! the entropic (Sinkhorn) relaxation.
//!
//! Couplings index rows by the first distribution `p` and columns by the second `q`, so row
//! sums equal `p` and column sums equal `q`. Policy code passes the new policy as `p` and the
//! old policy as `q`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::policy::PolicyTable;

/// Marginal L1 error accepted as converged.
pub const SINKHORN_TOLERANCE: f64 = 1e-9;
pub const SINKHORN_MAX_ITER: usize = 100_000;
/// Above this value of `lambda * max(D)` the kernel is handled in the log domain.
const LOG_DOMAIN_THRESHOLD: f64 = 30.0;
/// Plain scaling sweeps attempted before switching to Newton steps on the dual.
const SCALING_SWEEPS: usize = 2_000;
/// Kernel sharpening factor between annealing stages.
const ANNEAL_FACTOR: f64 = 4.0;
const ANNEAL_TOLERANCE: f64 = 1e-6;
const REDUCED_COST_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub q: Vec<Vec<f64>>,
    pub row_marginal: Distribution,
    pub col_marginal: Distribution,
}

impl Coupling {
    pub fn row_sums(&self) -> Vec<f64> {
        self.q.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.q.first().map_or(0, Vec::len);
        (0..n).map(|j| self.q.iter().map(|r| r[j]).sum()).collect()
    }

    /// L1 errors of the row and column sums against the marginals.
    pub fn marginal_errors(&self) -> (f64, f64) {
        let l1 = |sums: Vec<f64>, d: &Distribution| -> f64 {
            sums.iter().zip(d.probs()).map(|(a, b)| (a - b).abs()).sum()
        };
        (
            l1(self.row_sums(), &self.row_marginal),
            l1(self.col_sums(), &self.col_marginal),
        )
    }

    pub fn cost(&self, d: &CostMatrix) -> f64 {
        self.q
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &x)| x * d.get(i, j)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtResult {
    pub value: f64,
    pub coupling: Coupling,
    pub iterations: usize,
    pub converged: bool,
}

fn check_dims(p: &Distribution, q: &Distribution, d: &CostMatrix) -> Result<()> {
    for len in [p.len(), q.len()] {
        if len != d.n() {
            return Err(Error::DimensionMismatch {
                expected: d.n(),
                found: len,
            });
        }
    }
    Ok(())
}

/// Exact Wasserstein distance. Returns an optimal vertex coupling.
pub fn wasserstein(p: &Distribution, q: &Distribution, d: &CostMatrix) -> Result<OtResult> {
    check_dims(p, q, d)?;
    let (x, iterations) = TransportSimplex::new(p.probs(), q.probs(), d).solve()?;
    let coupling = Coupling {
        q: x,
        row_marginal: p.clone(),
        col_marginal: q.clone(),
    };
    Ok(OtResult {
        value: coupling.cost(d).max(0.0),
        coupling,
        iterations,
        converged: true,
    })
}

/// Transportation simplex on an m×n balanced problem with a spanning-tree basis.
struct TransportSimplex<'a> {
    m: usize,
    n: usize,
    d: &'a CostMatrix,
    x: Vec<f64>,
    basic: Vec<bool>,
}

impl<'a> TransportSimplex<'a> {
    /// Northwest-corner start; degenerate cells stay basic with zero flow so the basis always
    /// has exactly m + n - 1 cells.
    fn new(supply: &[f64], demand: &[f64], d: &'a CostMatrix) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let mut x = vec![0.0; m * n];
        let mut basic = vec![false; m * n];
        let (mut i, mut j) = (0, 0);
        loop {
            let flow = if i == m - 1 && j == n - 1 {
                a[i].max(b[j])
            } else {
                a[i].min(b[j])
            };
            x[i * n + j] = flow;
            basic[i * n + j] = true;
            a[i] -= flow;
            b[j] -= flow;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && a[i] <= b[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, d, x, basic }
    }

    fn solve(mut self) -> Result<(Vec<Vec<f64>>, usize)> {
        let cap = 50 * (self.m * self.n).max(16);
        for iteration in 0..cap {
            let (u, v) = self.potentials()?;
            // Bland: lowest-index improving cell enters.
            let entering = (0..self.m * self.n).find(|&k| {
                !self.basic[k]
                    && self.d.get(k / self.n, k % self.n) - u[k / self.n] - v[k % self.n]
                        < -REDUCED_COST_EPS
            });
            let Some(enter) = entering else {
                let rows = self.x.chunks(self.n).map(<[f64]>::to_vec).collect();
                return Ok((rows, iteration));
            };
            self.pivot(enter)?;
        }
        Err(Error::DegenerateBasis)
    }

    /// Dual potentials with `u[0] = 0`, solved along the basis tree.
    fn potentials(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if node < m {
                for j in 0..n {
                    if self.basic[node * n + j] && v[j].is_nan() {
                        v[j] = self.d.get(node, j) - u[node];
                        stack.push(m + j);
                    }
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if self.basic[i * n + j] && u[i].is_nan() {
                        u[i] = self.d.get(i, j) - v[j];
                        stack.push(i);
                    }
                }
            }
        }
        if u.iter().chain(&v).any(|x| x.is_nan()) {
            return Err(Error::DegenerateBasis);
        }
        Ok((u, v))
    }

    /// Basis cells on the tree path from column `j` to row `i`.
    fn tree_path(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let (m, n) = (self.m, self.n);
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
        let mut seen = vec![false; m + n];
        let start = m + j;
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            let neighbours: Vec<(usize, usize)> = if node < m {
                (0..n)
                    .filter(|&c| self.basic[node * n + c])
                    .map(|c| (m + c, node * n + c))
                    .collect()
            } else {
                let c = node - m;
                (0..m)
                    .filter(|&r| self.basic[r * n + c])
                    .map(|r| (r, r * n + c))
                    .collect()
            };
            for (next, cell) in neighbours {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        if !seen[i] {
            return Err(Error::DegenerateBasis);
        }
        let mut path = Vec::new();
        let mut node = i;
        while node != start {
            let (prev, cell) = parent[node].ok_or(Error::DegenerateBasis)?;
            path.push(cell);
            node = prev;
        }
        path.reverse();
        Ok(path)
    }

    fn pivot(&mut self, enter: usize) -> Result<()> {
        let (i, j) = (enter / self.n, enter % self.n);
        // Cells alternate -, +, -, ... starting next to column j and ending next to row i.
        let path = self.tree_path(i, j)?;
        let theta = path
            .iter()
            .step_by(2)
            .map(|&c| self.x[c])
            .fold(f64::INFINITY, f64::min);
        let leave = path
            .iter()
            .step_by(2)
            .copied()
            .filter(|&c| self.x[c] == theta)
            .min()
            .ok_or(Error::DegenerateBasis)?;
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.x[c] = (self.x[c] - theta).max(0.0);
            } else {
                self.x[c] += theta;
            }
        }
        self.x[enter] = theta;
        self.x[leave] = 0.0;
        self.basic[enter] = true;
        self.basic[leave] = false;
        Ok(())
    }
}

/// Entropic optimal transport: minimizes `<Q, D> - h(Q) / lambda` over couplings of `p` and
/// `q`, where `h(Q) = -sum Q ln Q`.
pub fn sinkhorn(p: &Distribution, q: &Distribution, d: &CostMatrix, lambda: f64) -> Result<OtResult> {
    sinkhorn_with(p, q, d, lambda, SINKHORN_TOLERANCE, SINKHORN_MAX_ITER)
}

pub fn sinkhorn_with(
    p: &Distribution,
    q: &Distribution,
    d: &CostMatrix,
    lambda: f64,
    tolerance: f64,
    max_iter: usize,
) -> Result<OtResult> {
    check_dims(p, q, d)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p.get(i) > 0.0).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q.get(j) > 0.0).collect();
    let mut solver = LogSinkhorn {
        lp: rows.iter().map(|&i| p.get(i).ln()).collect(),
        lq: cols.iter().map(|&j| q.get(j).ln()).collect(),
        p: rows.iter().map(|&i| p.get(i)).collect(),
        q: cols.iter().map(|&j| q.get(j)).collect(),
        cost: rows
            .iter()
            .map(|&i| cols.iter().map(|&j| d.get(i, j)).collect())
            .collect(),
        c: rows
            .iter()
            .map(|&i| cols.iter().map(|&j| lambda * d.get(i, j)).collect())
            .collect(),
        f: vec![0.0; rows.len()],
        g: vec![0.0; cols.len()],
    };
    let max_cost = d.inf_norm();
    let mut iterations = 0;
    let mut errors;
    if lambda * max_cost <= LOG_DOMAIN_THRESHOLD {
        iterations += solver.scale_standard(SCALING_SWEEPS.min(max_iter), tolerance);
        errors = solver.polish(tolerance, max_iter, &mut iterations);
    } else {
        // Anneal from a well-conditioned kernel; rescaled potentials warm-start each stage.
        let mut stage = LOG_DOMAIN_THRESHOLD / max_cost;
        solver.set_lambda(stage, 1.0);
        iterations += solver.scale_log(SCALING_SWEEPS.min(max_iter), ANNEAL_TOLERANCE);
        loop {
            let next = (stage * ANNEAL_FACTOR).min(lambda);
            solver.set_lambda(next, next / stage);
            stage = next;
            let tol = if stage < lambda { ANNEAL_TOLERANCE } else { tolerance };
            errors = solver.polish(tol, max_iter, &mut iterations);
            if stage >= lambda || iterations >= max_iter {
                break;
            }
        }
    }
    if errors.0 > tolerance || errors.1 > tolerance {
        return Err(Error::NonConvergence {
            iterations,
            row_residual: errors.0,
            col_residual: errors.1,
        });
    }
    let n = p.len();
    let mut full = vec![vec![0.0; n]; n];
    let mut cost = 0.0;
    let mut neg_entropy = 0.0;
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let log_q = solver.f[a] + solver.g[b] - solver.c[a][b];
            let x = log_q.exp();
            full[i][j] = x;
            cost += x * d.get(i, j);
            if x > 0.0 {
                neg_entropy += x * log_q;
            }
        }
    }
    Ok(OtResult {
        value: cost + neg_entropy / lambda,
        coupling: Coupling {
            q: full,
            row_marginal: p.clone(),
            col_marginal: q.clone(),
        },
        iterations,
        converged: true,
    })
}

/// Scaled dual potentials: `Q_ij = exp(f_i + g_j - c_ij)` with `c = lambda * D` restricted to
/// the supports of both marginals.
struct LogSinkhorn {
    p: Vec<f64>,
    q: Vec<f64>,
    lp: Vec<f64>,
    lq: Vec<f64>,
    cost: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    f: Vec<f64>,
    g: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl LogSinkhorn {
    /// Switches the kernel to `lambda`, multiplying the potentials by `scale`.
    fn set_lambda(&mut self, lambda: f64, scale: f64) {
        for (c, d) in self.c.iter_mut().zip(&self.cost) {
            for (c, d) in c.iter_mut().zip(d) {
                *c = lambda * d;
            }
        }
        self.f.iter_mut().chain(self.g.iter_mut()).for_each(|x| *x *= scale);
    }

    /// Newton steps on the dual, falling back to scaling sweeps, until both marginal errors
    /// are within `tolerance` or the iteration budget runs out.
    fn polish(&mut self, tolerance: f64, max_iter: usize, iterations: &mut usize) -> (f64, f64) {
        let mut errors = self.marginal_errors();
        while (errors.0 > tolerance || errors.1 > tolerance) && *iterations < max_iter {
            if !self.newton_step() {
                *iterations += self.scale_log(1, tolerance);
            }
            *iterations += 1;
            errors = self.marginal_errors();
        }
        errors
    }

    fn update_f(&mut self) {
        for a in 0..self.f.len() {
            let g = &self.g;
            let c = &self.c[a];
            self.f[a] = self.lp[a] - log_sum_exp(g.iter().zip(c).map(|(g, c)| g - c));
        }
    }

    fn update_g(&mut self) {
        for b in 0..self.g.len() {
            let lse = log_sum_exp(self.f.iter().zip(&self.c).map(|(f, c)| f - c[b]));
            self.g[b] = self.lq[b] - lse;
        }
    }

    fn scale_log(&mut self, sweeps: usize, tolerance: f64) -> usize {
        for it in 0..sweeps {
            self.update_f();
            self.update_g();
            if self.row_error() <= tolerance {
                return it + 1;
            }
        }
        sweeps
    }

    /// Classic scaling with the kernel `exp(-c)`; potentials are stored as logs afterwards.
    fn scale_standard(&mut self, sweeps: usize, tolerance: f64) -> usize {
        let k: Vec<Vec<f64>> = self
            .c
            .iter()
            .map(|r| r.iter().map(|c| (-c).exp()).collect())
            .collect();
        let mut u = vec![1.0; self.p.len()];
        let mut v = vec![1.0; self.q.len()];
        let mut done = sweeps;
        for it in 0..sweeps {
            for (a, ua) in u.iter_mut().enumerate() {
                *ua = self.p[a] / k[a].iter().zip(&v).map(|(k, v)| k * v).sum::<f64>();
            }
            for (b, vb) in v.iter_mut().enumerate() {
                *vb = self.q[b] / k.iter().zip(&u).map(|(k, u)| k[b] * u).sum::<f64>();
            }
            let err: f64 = (0..u.len())
                .map(|a| (u[a] * k[a].iter().zip(&v).map(|(k, v)| k * v).sum::<f64>() - self.p[a]).abs())
                .sum();
            if err <= tolerance {
                done = it + 1;
                break;
            }
        }
        self.f = u.iter().map(|x| x.ln()).collect();
        self.g = v.iter().map(|x| x.ln()).collect();
        if self.f.iter().chain(&self.g).any(|x| !x.is_finite()) {
            self.f.iter_mut().for_each(|x| *x = 0.0);
            self.g.iter_mut().for_each(|x| *x = 0.0);
            return done + self.scale_log(sweeps, tolerance);
        }
        done
    }

    fn plan(&self) -> Vec<Vec<f64>> {
        self.f
            .iter()
            .zip(&self.c)
            .map(|(f, c)| self.g.iter().zip(c).map(|(g, c)| (f + g - c).exp()).collect())
            .collect()
    }

    fn row_error(&self) -> f64 {
        self.marginal_errors().0
    }

    fn marginal_errors(&self) -> (f64, f64) {
        Self::errors_of(&self.p, &self.q, &self.c, &self.f, &self.g)
    }

    fn errors_of(p: &[f64], q: &[f64], c: &[Vec<f64>], f: &[f64], g: &[f64]) -> (f64, f64) {
        let mut cols = vec![0.0; q.len()];
        let mut rows = 0.0;
        for ((fa, ca), pa) in f.iter().zip(c).zip(p) {
            let mut r = 0.0;
            for ((gb, cab), col) in g.iter().zip(ca).zip(cols.iter_mut()) {
                let x = (fa + gb - cab).exp();
                r += x;
                *col += x;
            }
            rows += (r - pa).abs();
        }
        let cols = cols.iter().zip(q).map(|(c, q)| (c - q).abs()).sum();
        (rows, cols)
    }

    /// One damped Newton step on the concave dual, with the last column potential pinned.
    /// Returns false when no step reduced the marginal error.
    fn newton_step(&mut self) -> bool {
        let (m, n) = (self.f.len(), self.g.len());
        let dim = m + n - 1;
        if dim == 0 {
            return false;
        }
        let plan = self.plan();
        let r: Vec<f64> = plan.iter().map(|x| x.iter().sum()).collect();
        let col: Vec<f64> = (0..n).map(|b| plan.iter().map(|x| x[b]).sum()).collect();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut grad = DVector::<f64>::zeros(dim);
        for a in 0..m {
            h[(a, a)] = r[a];
            grad[a] = self.p[a] - r[a];
        }
        for b in 0..n - 1 {
            h[(m + b, m + b)] = col[b];
            grad[m + b] = self.q[b] - col[b];
            for a in 0..m {
                h[(a, m + b)] = plan[a][b];
                h[(m + b, a)] = plan[a][b];
            }
        }
        let Some(step) = h.lu().solve(&grad) else {
            return false;
        };
        let merit = |f: &[f64], g: &[f64]| -> f64 {
            let (r, c) = Self::errors_of(&self.p, &self.q, &self.c, f, g);
            r + c
        };
        let base = merit(&self.f, &self.g);
        let mut t = 1.0;
        for _ in 0..50 {
            let f: Vec<f64> = (0..m).map(|a| self.f[a] + t * step[a]).collect();
            let mut g = self.g.clone();
            for b in 0..n - 1 {
                g[b] += t * step[m + b];
            }
            let value = merit(&f, &g);
            if value.is_finite() && value < base {
                self.f = f;
                self.g = g;
                return true;
            }
            t *= 0.5;
        }
        false
    }
}

/// Which divergence `expected_divergence` measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "lambda")]
pub enum DivergenceKind {
    Wasserstein,
    Sinkhorn(f64),
}

/// `sum_s rho[s] * d(new_s, old_s)`.
pub fn expected_divergence(
    old: &PolicyTable,
    new: &PolicyTable,
    rho: &[f64],
    d: &CostMatrix,
    kind: DivergenceKind,
) -> Result<f64> {
    if old.n_states() != new.n_states() || old.n_states() != rho.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} old rows, {} new rows, {} state weights",
            old.n_states(),
            new.n_states(),
            rho.len()
        )));
    }
    if old.n_actions() != d.n() || new.n_actions() != d.n() {
        return Err(Error::ShapeMismatch(format!(
            "policies over {} and {} actions, cost matrix over {}",
            old.n_actions(),
            new.n_actions(),
            d.n()
        )));
    }
    let mut total = 0.0;
    for (s, &w) in rho.iter().enumerate() {
        if w < 0.0 {
            return Err(Error::ShapeMismatch(format!("negative state weight at {s}")));
        }
        if w == 0.0 {
            continue;
        }
        let dist = match kind {
            DivergenceKind::Wasserstein => wasserstein(new.row(s), old.row(s), d)?.value,
            DivergenceKind::Sinkhorn(lambda) => sinkhorn(new.row(s), old.row(s), d, lambda)?.value,
        };
        total += w * dist;
    }
    Ok(total)
}
