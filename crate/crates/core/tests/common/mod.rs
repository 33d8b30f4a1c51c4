//! Shared oracles for the integration tests.
#![allow(dead_code)]

use ottr_core::{CostMatrix, Distribution, Rng};

/// Minimum transport cost by enumerating every basis of the transportation polytope.
///
/// A basis is a spanning tree over the `2N` row and column nodes, so every subset of
/// `2N - 1` cells that forms a tree is solved by peeling leaves and the cheapest
/// nonnegative one wins. Exponential, fine for `N <= 4`.
pub fn brute_force_wasserstein(p: &[f64], q: &[f64], d: &CostMatrix) -> f64 {
    let n = p.len();
    let cells = n * n;
    let basis = 2 * n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << cells) {
        if mask.count_ones() as usize != basis {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / n, c % n))
            .collect();
        if !is_tree(n, &edges) {
            continue;
        }
        if let Some(flow) = peel(p, q, &edges) {
            let cost: f64 = edges.iter().zip(&flow).map(|(&(i, j), f)| f * d.get(i, j)).sum();
            best = best.min(cost);
        }
    }
    best
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn is_tree(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Flows on a spanning tree are forced: a leaf node ships its whole remaining supply.
fn peel(p: &[f64], q: &[f64], edges: &[(usize, usize)]) -> Option<Vec<f64>> {
    let n = p.len();
    let mut supply: Vec<f64> = p.iter().chain(q).copied().collect();
    let mut alive = vec![true; edges.len()];
    let mut flow = vec![0.0; edges.len()];
    for _ in 0..edges.len() {
        let mut degree = vec![0usize; 2 * n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            if alive[e] {
                degree[i] += 1;
                degree[n + j] += 1;
            }
        }
        let (e, leaf) = edges
            .iter()
            .enumerate()
            .filter(|&(e, _)| alive[e])
            .find_map(|(e, &(i, j))| {
                if degree[i] == 1 {
                    Some((e, i))
                } else if degree[n + j] == 1 {
                    Some((e, n + j))
                } else {
                    None
                }
            })?;
        let (i, j) = edges[e];
        let other = if leaf == i { n + j } else { i };
        let f = supply[leaf];
        if f < -1e-12 {
            return None;
        }
        flow[e] = f;
        supply[leaf] = 0.0;
        supply[other] -= f;
        alive[e] = false;
    }
    Some(flow)
}

/// Random metric on `n` points of the unit interval.
pub fn random_line_metric(n: usize, rng: &mut Rng) -> CostMatrix {
    let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    CostMatrix::new(
        (0..n)
            .map(|i| (0..n).map(|j| (x[i] - x[j]).abs()).collect())
            .collect(),
    )
    .expect("a line metric is valid")
}

pub fn random_distribution(n: usize, rng: &mut Rng) -> Distribution {
    Distribution::random(n, rng)
}

/// Grid minimum of `f` over `[lo, hi]` followed by golden-section refinement inside the
/// bracket around the best grid point. `f` must be convex.
pub fn grid_minimum(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..points {
        let x = lo + step * k as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let mut a = lo + step * best_k.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_k + 1) as f64).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - ratio * (b - a);
        let e = a + ratio * (b - a);
        if f(c) <= f(e) {
            b = e;
        } else {
            a = c;
        }
        if b - a < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}
