//! Community-labelled directed graphs, PageRank and Max-Linear solvers, and
//! the root score sequences fed to the estimators.
//!
//! A graph holds `n_roots` root vertices followed by community members.
//! Edges run from members to roots (`j -> i` means `j` links to `i`). Root
//! `i` takes at most one in-neighbor from each community, member
//! `i mod size`, so the in-neighbor scores of consecutive roots follow the
//! stationary community series.

mod io;
mod solve;

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::aggregation::{hex_digest, AggregateSeries};
use crate::error::{Error, Result};
use crate::generators::{gen_armax_column, ColumnRole, ColumnSpec, PersonalizationLaw, RowLengthLaw};
use crate::seed::{self, label};

pub use io::{read_edge_list, read_graph, read_scores_csv, write_community_labels, write_edge_list, write_scores_csv};
pub use solve::{maxlinear_solve, pagerank_solve, PageRankConfig, ScoreVector, MAX_ITERS};

/// Members shared with an earlier community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    /// Index of the earlier community.
    pub with: usize,
    /// Its first `members` members also belong to this community.
    pub members: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunitySpec {
    pub size: usize,
    pub column: ColumnSpec,
    #[serde(default)]
    pub overlap: Option<Overlap>,
}

/// How shared members are represented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// One vertex, one score, belonging to both communities.
    #[default]
    Alias,
    /// A separate vertex per community carrying a copy of the score.
    Duplicate,
}

/// Which dominating communities every root links from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominatingAttachment {
    /// At least one, chosen at random when needed.
    #[default]
    AtLeastOne,
    /// All of them, so every root sees a fixed number of dominating
    /// in-neighbors.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub n_roots: usize,
    pub communities: Vec<CommunitySpec>,
    /// Law of the in-degree `N_i`; capped at the number of communities.
    pub attachment: RowLengthLaw,
    #[serde(default)]
    pub dominating: DominatingAttachment,
    #[serde(default)]
    pub overlap_mode: OverlapMode,
    /// Root personalization values `Q_i`; defaults to `(1 - c) / n_roots`
    /// in the pipelines.
    pub personalization: PersonalizationLaw,
    pub seed: u64,
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_roots == 0 {
            return Err(Error::Config("graph needs at least one root".into()));
        }
        if self.communities.is_empty() {
            return Err(Error::Config("graph needs at least one community".into()));
        }
        if !self.communities.iter().any(|c| c.column.role == ColumnRole::Dominating) {
            return Err(Error::Config("at least one community must be dominating".into()));
        }
        self.attachment_law().validate()?;
        for (i, c) in self.communities.iter().enumerate() {
            if c.size == 0 {
                return Err(Error::Config(format!("community {i} is empty")));
            }
            if let Some(o) = c.overlap {
                if o.with >= i {
                    return Err(Error::Config(format!("community {i} can only overlap an earlier community")));
                }
                if o.members > c.size || o.members > self.communities[o.with].size {
                    return Err(Error::Config(format!("community {i} shares more members than exist")));
                }
            }
        }
        Ok(())
    }

    /// The attachment law with its range forced into `1..=communities`; a
    /// zero minimum is clamped to one.
    pub fn attachment_law(&self) -> RowLengthLaw {
        let k = self.communities.len().max(1);
        let min = self.attachment.min.clamp(1, k);
        let cap = self.attachment.cap.unwrap_or(k).clamp(min, k);
        RowLengthLaw { alpha: self.attachment.alpha, cap: Some(cap), min }
    }

    /// Dominating communities, in order.
    pub fn dominating_indices(&self) -> Vec<usize> {
        (0..self.communities.len())
            .filter(|&i| self.communities[i].column.role == ColumnRole::Dominating)
            .collect()
    }
}

/// Directed graph with community labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityGraph {
    roots: Vec<usize>,
    /// Community ids per vertex; empty for roots.
    memberships: Vec<Vec<usize>>,
    /// Per community.
    dominating: Vec<bool>,
    edges: Vec<(usize, usize)>,
    /// Member scores and root personalization values.
    weights: Vec<f64>,
    out_degree: Vec<usize>,
    in_start: Vec<usize>,
    in_src: Vec<usize>,
}

impl CommunityGraph {
    /// Builds the adjacency structure. `weights`, `memberships` and
    /// `dominating` may be empty for unlabelled graphs.
    pub fn new(
        n_vertices: usize,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
        roots: Vec<usize>,
        memberships: Vec<Vec<usize>>,
        dominating: Vec<bool>,
    ) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n_vertices || *b >= n_vertices) {
            return Err(Error::Config(format!("edge {a} -> {b} outside {n_vertices} vertices")));
        }
        if roots.iter().any(|&r| r >= n_vertices) {
            return Err(Error::Config("root id outside the vertex range".into()));
        }
        let weights = if weights.is_empty() { vec![0.0; n_vertices] } else { weights };
        let memberships = if memberships.is_empty() { vec![Vec::new(); n_vertices] } else { memberships };
        if weights.len() != n_vertices || memberships.len() != n_vertices {
            return Err(Error::Config("per-vertex data does not match the vertex count".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("vertex weights must be finite and nonnegative".into()));
        }
        if memberships.iter().flatten().any(|&c| c >= dominating.len()) {
            return Err(Error::Config("community label without a community".into()));
        }
        let mut out_degree = vec![0usize; n_vertices];
        let mut in_count = vec![0usize; n_vertices + 1];
        for &(a, b) in &edges {
            out_degree[a] += 1;
            in_count[b + 1] += 1;
        }
        for i in 0..n_vertices {
            in_count[i + 1] += in_count[i];
        }
        let in_start = in_count;
        let mut fill = in_start.clone();
        let mut in_src = vec![0usize; edges.len()];
        for &(a, b) in &edges {
            in_src[fill[b]] = a;
            fill[b] += 1;
        }
        Ok(Self { roots, memberships, dominating, edges, weights, out_degree, in_start, in_src })
    }

    /// Unlabelled graph on `n` vertices.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(n, edges, Vec::new(), Vec::new(), Vec::new(), Vec::new())
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_degree[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_start[v + 1] - self.in_start[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_src[self.in_start[v]..self.in_start[v + 1]]
    }

    pub fn communities_of(&self, v: usize) -> &[usize] {
        &self.memberships[v]
    }

    pub fn n_communities(&self) -> usize {
        self.dominating.len()
    }

    pub fn is_dominating_community(&self, c: usize) -> bool {
        self.dominating[c]
    }

    /// Member scores (community vertices) and `Q_i` (roots).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            out.extend_from_slice(&(a as u64).to_le_bytes());
            out.extend_from_slice(&(b as u64).to_le_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for &r in &self.roots {
            out.extend_from_slice(&(r as u64).to_le_bytes());
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        hex_digest(&self.content_bytes())
    }
}

/// Chooses the communities root `i` links from, given its in-degree.
fn choose_communities(n_in: usize, dom: &[usize], other: &[usize], mode: DominatingAttachment, rng: &mut seed::Rng) -> Vec<usize> {
    let k = dom.len() + other.len();
    match mode {
        DominatingAttachment::All => {
            let extra = n_in.saturating_sub(dom.len()).min(other.len());
            let mut chosen: Vec<usize> = dom.to_vec();
            chosen.extend(index::sample(rng, other.len(), extra).into_iter().map(|i| other[i]));
            chosen
        }
        DominatingAttachment::AtLeastOne => {
            let all: Vec<usize> = dom.iter().chain(other).copied().collect();
            let mut chosen: Vec<usize> = index::sample(rng, k, n_in.min(k)).into_iter().map(|i| all[i]).collect();
            if !chosen.iter().any(|c| dom.contains(c)) {
                chosen[0] = dom[rng.random_range(0..dom.len())];
            }
            chosen
        }
    }
}

pub fn build_community_graph(cfg: &GraphConfig) -> Result<CommunityGraph> {
    cfg.validate()?;
    let n_roots = cfg.n_roots;
    let k = cfg.communities.len();
    let dom = cfg.dominating_indices();
    let other: Vec<usize> = (0..k).filter(|i| !dom.contains(i)).collect();

    // Member vertex ids per community slot, and the vertex weights.
    let mut weights = cfg.personalization.generate(n_roots, seed::derive(cfg.seed, &[label::GRAPH, label::PERSONALIZATION]))?;
    let mut memberships: Vec<Vec<usize>> = vec![Vec::new(); n_roots];
    let mut slots: Vec<Vec<usize>> = Vec::with_capacity(k);
    for (c, spec) in cfg.communities.iter().enumerate() {
        let values = gen_armax_column(
            spec.size,
            spec.column.tail_index,
            spec.column.extremal_index,
            seed::derive(cfg.seed, &[label::GRAPH, label::COLUMN, c as u64]),
        )?;
        let shared = spec.overlap.map_or(0, |o| o.members);
        let mut ids = Vec::with_capacity(spec.size);
        for (s, &v) in values.iter().enumerate() {
            match (spec.overlap, cfg.overlap_mode) {
                (Some(o), OverlapMode::Alias) if s < shared => {
                    let id = slots[o.with][s];
                    memberships[id].push(c);
                    ids.push(id);
                }
                (Some(o), OverlapMode::Duplicate) if s < shared => {
                    let id = weights.len();
                    weights.push(weights[slots[o.with][s]]);
                    memberships.push(vec![c]);
                    ids.push(id);
                }
                _ => {
                    let id = weights.len();
                    weights.push(v);
                    memberships.push(vec![c]);
                    ids.push(id);
                }
            }
        }
        slots.push(ids);
    }

    let law = cfg.attachment_law();
    let mut rng = seed::rng(cfg.seed, &[label::GRAPH, label::ROW_LENGTHS]);
    let mut edges = Vec::new();
    for i in 0..n_roots {
        let n_in = law.draw(&mut rng);
        let mut chosen = choose_communities(n_in, &dom, &other, cfg.dominating, &mut rng);
        chosen.sort_unstable();
        // Aliased members can be picked twice for the same root; keep one edge.
        let sources: BTreeSet<usize> = chosen.iter().map(|&c| slots[c][i % slots[c].len()]).collect();
        edges.extend(sources.into_iter().map(|j| (j, i)));
    }
    let dominating = (0..k).map(|c| dom.contains(&c)).collect();
    CommunityGraph::new(weights.len(), edges, weights, (0..n_roots).collect(), memberships, dominating)
}

/// How root scores are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RootMode {
    /// `c * sum_j Y_j + Q_i` and `max(c * max_j Y_j, Q_i)` over the first
    /// generation of in-neighbors.
    OneStep,
    /// Root entries of the PageRank and Max-Linear solutions with
    /// personalization proportional to the vertex weights; the PageRank
    /// entries are rescaled to the one-step units.
    FullSolve { tol: f64 },
}

/// Root score sequences: `sums` from the PageRank form, `maxima` from the
/// Max-Linear form.
pub fn root_score_series(g: &CommunityGraph, c: f64, mode: RootMode) -> Result<AggregateSeries> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Config(format!("damping factor {c} outside (0, 1)")));
    }
    let w = g.weights();
    let (sums, maxima) = match mode {
        RootMode::OneStep => g
            .roots()
            .iter()
            .map(|&i| {
                let nb = g.in_neighbors(i);
                let s = c * nb.iter().map(|&j| w[j]).sum::<f64>() + w[i];
                let m = (c * nb.iter().map(|&j| w[j]).fold(0.0, f64::max)).max(w[i]);
                (s, m)
            })
            .unzip(),
        RootMode::FullSolve { tol } => {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::Config("full solve needs positive total vertex weight".into()));
            }
            let q: Vec<f64> = w.iter().map(|v| v / total).collect();
            let pr = pagerank_solve(g, &PageRankConfig { c, q, tol: tol * (1.0 - c) / total, max_iters: MAX_ITERS })?;
            let ml = maxlinear_solve(g, c, w, tol)?;
            let scale = total / (1.0 - c);
            g.roots().iter().map(|&i| (pr.scores[i] * scale, ml.scores[i])).unzip()
        }
    };
    Ok(AggregateSeries { sums, maxima, weights: vec![c; g.n_communities().max(1)], fingerprint: g.fingerprint() })
}
