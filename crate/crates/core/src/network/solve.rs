use serde::{Deserialize, Serialize};

use super::CommunityGraph;
use crate::error::{Error, Result};

/// Iteration guard for both solvers.
pub const MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankConfig {
    pub c: f64,
    /// Personalization, summing to one.
    pub q: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl PageRankConfig {
    pub fn uniform(n: usize, c: f64) -> Self {
        Self { c, q: vec![1.0 / n as f64; n], tol: 1e-10, max_iters: MAX_ITERS }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Config(format!("damping factor {} outside (0, 1)", self.c)));
        }
        if self.q.len() != n {
            return Err(Error::Config(format!("personalization has {} entries for {n} vertices", self.q.len())));
        }
        if self.q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("personalization entries must be nonnegative".into()));
        }
        let total: f64 = self.q.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("personalization sums to {total}, not 1")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm residual of `scores` against the defining equations.
    pub residual: f64,
}

/// Iterates `step` from `start` until the sup-norm change drops below `tol`.
/// The returned vector is the one whose image moved less than `tol`, so the
/// reported residual is exactly its residual.
fn fixed_point(start: Vec<f64>, tol: f64, max_iters: usize, step: impl Fn(&[f64], &mut [f64])) -> Result<ScoreVector> {
    let mut r = start;
    let mut next = vec![0.0; r.len()];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iters {
        step(&r, &mut next);
        residual = r.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < tol {
            return Ok(ScoreVector { scores: r, iterations: it, residual });
        }
        std::mem::swap(&mut r, &mut next);
    }
    Err(Error::NoConvergence { iterations: max_iters, residual })
}

/// Solves `R_i = c sum_{j -> i} R_j / D_j + (1 - c) q_i` by fixed-point
/// iteration from `R = q`. Vertices without out-links contribute nothing
/// and their mass is not redistributed.
pub fn pagerank_solve(g: &CommunityGraph, cfg: &PageRankConfig) -> Result<ScoreVector> {
    let n = g.n_vertices();
    cfg.validate(n)?;
    let c = cfg.c;
    let inv_deg: Vec<f64> = (0..n).map(|j| if g.out_degree(j) > 0 { 1.0 / g.out_degree(j) as f64 } else { 0.0 }).collect();
    fixed_point(cfg.q.clone(), cfg.tol, cfg.max_iters, |r, out| {
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = g.in_neighbors(i).iter().map(|&j| r[j] * inv_deg[j]).sum();
            *o = c * s + (1.0 - c) * cfg.q[i];
        }
    })
}

/// Solves `R_i = max(Q_i, max_{j -> i} (c / D_j) R_j)` by monotone
/// iteration from `R = Q`.
pub fn maxlinear_solve(g: &CommunityGraph, c: f64, q: &[f64], tol: f64) -> Result<ScoreVector> {
    let n = g.n_vertices();
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Config(format!("damping factor {c} outside (0, 1)")));
    }
    if q.len() != n || q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config("Max-Linear needs one nonnegative Q per vertex".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let coef: Vec<f64> = (0..n).map(|j| if g.out_degree(j) > 0 { c / g.out_degree(j) as f64 } else { 0.0 }).collect();
    fixed_point(q.to_vec(), tol, MAX_ITERS, |r, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = g.in_neighbors(i).iter().map(|&j| coef[j] * r[j]).fold(q[i], f64::max);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng as _;

    fn random_graph(n: usize, p: f64, seed: u64) -> CommunityGraph {
        let mut rng = seed::rng(seed, &[]);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        CommunityGraph::from_edges(n, edges).unwrap()
    }

    fn pagerank_residual(g: &CommunityGraph, cfg: &PageRankConfig, r: &[f64]) -> f64 {
        (0..g.n_vertices())
            .map(|i| {
                let s: f64 = g.in_neighbors(i).iter().map(|&j| r[j] / g.out_degree(j) as f64).sum();
                (r[i] - cfg.c * s - (1.0 - cfg.c) * cfg.q[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn pagerank_hand_examples() {
        let g = CommunityGraph::from_edges(1, vec![]).unwrap();
        let r = pagerank_solve(&g, &PageRankConfig { c: 0.5, q: vec![1.0], tol: 1e-12, max_iters: 100 }).unwrap();
        assert!((r.scores[0] - 0.5).abs() < 1e-12);

        let g = CommunityGraph::from_edges(2, vec![(0, 1)]).unwrap();
        let cfg = PageRankConfig { c: 0.5, q: vec![0.5, 0.5], tol: 1e-12, max_iters: 100 };
        let r = pagerank_solve(&g, &cfg).unwrap();
        assert!((r.scores[0] - 0.25).abs() < 1e-12);
        assert!((r.scores[1] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn pagerank_residual_contract() {
        for s in 0..5 {
            let g = random_graph(300, 0.02, s);
            let cfg = PageRankConfig { tol: 1e-10, ..PageRankConfig::uniform(300, 0.85) };
            let r = pagerank_solve(&g, &cfg).unwrap();
            assert!(r.residual < 1e-10);
            assert!(pagerank_residual(&g, &cfg, &r.scores) < 1e-10);
            assert!(r.scores.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn pagerank_validation_and_guard() {
        let g = CommunityGraph::from_edges(2, vec![(0, 1), (1, 0)]).unwrap();
        assert!(pagerank_solve(&g, &PageRankConfig { c: 1.0, ..PageRankConfig::uniform(2, 0.5) }).is_err());
        assert!(pagerank_solve(&g, &PageRankConfig { q: vec![0.5, 0.6], ..PageRankConfig::uniform(2, 0.5) }).is_err());
        let slow = PageRankConfig { c: 0.99, q: vec![1.0, 0.0], tol: 1e-15, max_iters: 3 };
        assert!(matches!(pagerank_solve(&g, &slow), Err(Error::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn maxlinear_hand_examples() {
        let g = CommunityGraph::from_edges(2, vec![(0, 1)]).unwrap();
        let r = maxlinear_solve(&g, 0.5, &[4.0, 1.0], 1e-12).unwrap();
        assert_eq!(r.scores, vec![4.0, 2.0]);

        let g = CommunityGraph::from_edges(2, vec![(0, 1), (1, 0)]).unwrap();
        let r = maxlinear_solve(&g, 0.5, &[1.0, 1.0], 1e-12).unwrap();
        assert_eq!(r.scores, vec![1.0, 1.0]);

        let g = CommunityGraph::from_edges(3, vec![(0, 1)]).unwrap();
        assert_eq!(maxlinear_solve(&g, 0.5, &[1.0, 0.0, 7.0], 1e-12).unwrap().scores[2], 7.0);
    }

    /// `max(Q_i, max over paths s -> ... -> i of Q_s * prod c / D)`, by
    /// enumerating every path backwards from `i`.
    fn path_oracle(g: &CommunityGraph, c: f64, q: &[f64], i: usize) -> f64 {
        fn walk(g: &CommunityGraph, c: f64, q: &[f64], v: usize, gain: f64, best: &mut f64) {
            *best = best.max(gain * q[v]);
            for &j in g.in_neighbors(v) {
                walk(g, c, q, j, gain * c / g.out_degree(j) as f64, best);
            }
        }
        let mut best = 0.0;
        walk(g, c, q, i, 1.0, &mut best);
        best
    }

    #[test]
    fn maxlinear_matches_paths_on_random_dags() {
        let mut rng = seed::rng(77, &[]);
        for _ in 0..300 {
            let n = rng.random_range(1..=8);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random::<f64>() < 0.4 {
                        edges.push((a, b));
                    }
                }
            }
            let g = CommunityGraph::from_edges(n, edges).unwrap();
            let q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let c = rng.random_range(0.1..0.95);
            let r = maxlinear_solve(&g, c, &q, 1e-14).unwrap();
            for i in 0..n {
                assert!((r.scores[i] - path_oracle(&g, c, &q, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maxlinear_converges_on_cyclic_graphs() {
        let g = random_graph(200, 0.03, 4);
        let q: Vec<f64> = (0..200).map(|i| (i % 7) as f64).collect();
        let r = maxlinear_solve(&g, 0.85, &q, 1e-12).unwrap();
        assert!(r.scores.iter().zip(&q).all(|(a, b)| a >= b));
    }
}
