//! Ground truth and simulated data under the Bradley-Terry-Luce model.
//!
//! Item `j` beats item `i` with probability `w_j / (w_i + w_j)`. For every
//! edge `(i, j)` of the comparison graph we observe `L` such comparisons and
//! keep only the win frequency `y_{i,j}` (the fraction of comparisons won by
//! `j`), with `y_{j,i} = 1 - y_{i,j}`.

mod format;

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ranking::ordering_desc;
use crate::seed::Seed;

pub use format::{read_data, write_data};

/// Latent preference scores `w` together with their logarithms `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    w: Vec<f64>,
    theta: Vec<f64>,
}

/// Validating constructor for [`ScoreVector`].
pub fn make_scores(w: Vec<f64>) -> Result<ScoreVector> {
    ScoreVector::new(w)
}

impl ScoreVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::TooFewItems(w.len()));
        }
        if let Some((index, &value)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonPositiveScore { index, value });
        }
        let theta = w.iter().map(|v| v.ln()).collect();
        Ok(ScoreVector { w, theta })
    }

    pub fn from_theta(theta: Vec<f64>) -> Result<Self> {
        Self::new(theta.iter().map(|t| t.exp()).collect())
    }

    /// Scores drawn independently and uniformly from `[lo, hi]`.
    pub fn uniform(n: usize, lo: f64, hi: f64, seed: Seed) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!("invalid score range [{lo}, {hi}]")));
        }
        let mut rng = seed.rng();
        let w = (0..n)
            .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        Self::new(w)
    }

    /// The simulation default: uniform on `[0.5, 1]`.
    pub fn uniform_half_one(n: usize, seed: Seed) -> Result<Self> {
        Self::uniform(n, 0.5, 1.0, seed)
    }

    /// `w_i = 1` for the first `k` items and `1 - delta` for the rest.
    pub fn two_level(n: usize, k: usize, delta: f64) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::BadK { k, n });
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Config(format!("delta must lie in [0, 1), got {delta}")));
        }
        Self::new((0..n).map(|i| if i < k { 1.0 } else { 1.0 - delta }).collect())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn w_min(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn w_max(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn theta_min(&self) -> f64 {
        self.w_min().ln()
    }

    pub fn theta_max(&self) -> f64 {
        self.w_max().ln()
    }

    /// Condition number `w_max / w_min`.
    pub fn kappa(&self) -> f64 {
        self.w_max() / self.w_min()
    }

    pub fn theta_mean(&self) -> f64 {
        self.theta.iter().sum::<f64>() / self.len() as f64
    }

    /// `w / sum(w)`, the stationary distribution of the population chain.
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.w.iter().sum();
        self.w.iter().map(|v| v / total).collect()
    }

    /// `exp(theta - mean(theta))`, the scale on which a centered MLE is compared.
    pub fn centered_exp(&self) -> Vec<f64> {
        let mean = self.theta_mean();
        self.theta.iter().map(|t| (t - mean).exp()).collect()
    }

    /// Items sorted by descending score, ties broken by smaller index.
    pub fn order(&self) -> Vec<usize> {
        ordering_desc(&self.w)
    }

    pub fn top_k(&self, k: usize) -> Result<BTreeSet<usize>> {
        if k == 0 || k >= self.len() {
            return Err(Error::BadK { k, n: self.len() });
        }
        Ok(self.order().into_iter().take(k).collect())
    }

    /// Copy of `w` sorted in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut w = self.w.clone();
        w.sort_by(|a, b| b.total_cmp(a));
        w
    }
}

/// Undirected comparison graph on items `0..n`.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically;
/// the position of an edge in that list is its edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl ComparisonGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewItems(n));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::Config(format!("self-loop at {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate edge {:?}", w[0])));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(ComparisonGraph {
            n,
            edges: list,
            adjacency,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn d_min(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn d_max(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Observed edge density `2|E| / (n(n-1))`.
    pub fn edge_density(&self) -> f64 {
        2.0 * self.edges.len() as f64 / (self.n * (self.n - 1)) as f64
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).ok()
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.n);
        let mut components = self.n;
        for &(i, j) in &self.edges {
            if uf.union(i, j) {
                components -= 1;
            }
        }
        components == 1
    }

    /// The degree event `np/2 <= d_min <= d_max <= 3np/2`.
    pub fn degrees_concentrated(&self, p: f64) -> bool {
        let np = self.n as f64 * p;
        self.d_min() as f64 >= np / 2.0 && self.d_max() as f64 <= 1.5 * np
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the two sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Erdős–Rényi graph: each of the `n(n-1)/2` pairs is an edge with probability `p`.
pub fn generate_er_graph(n: usize, p: f64, seed: Seed) -> Result<ComparisonGraph> {
    if n < 2 {
        return Err(Error::TooFewItems(n));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = seed.rng();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    ComparisonGraph::new(n, edges)
}

/// Per-edge win frequencies on a comparison graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonData {
    graph: ComparisonGraph,
    comparisons: Option<u32>,
    /// `y_{i,j}` for each stored edge `(i, j)`, `i < j`.
    y: Vec<f64>,
    /// Number of comparisons on each stored edge won by the larger index.
    wins: Option<Vec<u32>>,
}

impl ComparisonData {
    /// Data with integer win counts: `wins[e]` of the `l` comparisons on edge `e = (i, j)` went to `j`.
    pub fn from_wins(graph: ComparisonGraph, l: u32, wins: Vec<u32>) -> Result<Self> {
        if l == 0 {
            return Err(Error::ZeroComparisons);
        }
        if wins.len() != graph.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.edge_count(),
                found: wins.len(),
            });
        }
        if let Some(&bad) = wins.iter().find(|&&c| c > l) {
            return Err(Error::Config(format!("win count {bad} exceeds L = {l}")));
        }
        let y = wins.iter().map(|&c| c as f64 / l as f64).collect();
        Ok(ComparisonData {
            graph,
            comparisons: Some(l),
            y,
            wins: Some(wins),
        })
    }

    /// Data given directly by real-valued frequencies (the `L -> infinity` limit when `l` is `None`).
    pub fn from_frequencies(graph: ComparisonGraph, l: Option<u32>, y: Vec<f64>) -> Result<Self> {
        if y.len() != graph.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.edge_count(),
                found: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbability(bad));
        }
        if l == Some(0) {
            return Err(Error::ZeroComparisons);
        }
        Ok(ComparisonData {
            graph,
            comparisons: l,
            y,
            wins: None,
        })
    }

    pub fn graph(&self) -> &ComparisonGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Comparisons per edge; `None` for population (noise-free) data.
    pub fn comparisons(&self) -> Option<u32> {
        self.comparisons
    }

    pub fn wins(&self) -> Option<&[u32]> {
        self.wins.as_deref()
    }

    /// `y_{i,j}` for the stored orientation of edge `e`.
    pub fn edge_frequency(&self, e: usize) -> f64 {
        self.y[e]
    }

    pub fn edge_frequencies(&self) -> &[f64] {
        &self.y
    }

    /// `y_{i,j}`, the fraction of comparisons between `i` and `j` won by `j`.
    pub fn frequency(&self, i: usize, j: usize) -> Option<f64> {
        let e = self.graph.edge_index(i, j)?;
        Some(if i < j { self.y[e] } else { 1.0 - self.y[e] })
    }

    /// Iterator over `(i, j, y_{i,j})` for stored edges, `i < j`.
    pub fn iter_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph
            .edges()
            .iter()
            .zip(&self.y)
            .map(|(&(i, j), &y)| (i, j, y))
    }
}

fn check_dims(graph: &ComparisonGraph, scores: &ScoreVector) -> Result<()> {
    if graph.n() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            found: scores.len(),
        });
    }
    Ok(())
}

/// Simulates `l` independent comparisons on each edge.
///
/// Each edge draws from its own stream keyed by the item pair, so the outcome
/// on a pair does not depend on which other pairs happen to be edges.
pub fn sample_comparisons(
    graph: &ComparisonGraph,
    scores: &ScoreVector,
    l: u32,
    seed: Seed,
) -> Result<ComparisonData> {
    check_dims(graph, scores)?;
    if l == 0 {
        return Err(Error::ZeroComparisons);
    }
    let n = graph.n() as u64;
    let w = scores.w();
    let wins = graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let prob = w[j] / (w[i] + w[j]);
            let mut rng = seed.child(i as u64 * n + j as u64).rng();
            (0..l).filter(|_| rng.random::<f64>() < prob).count() as u32
        })
        .collect();
    ComparisonData::from_wins(graph.clone(), l, wins)
}

/// Noise-free frequencies `y*_{i,j} = w_j / (w_i + w_j)`.
pub fn population_frequencies(
    graph: &ComparisonGraph,
    scores: &ScoreVector,
) -> Result<ComparisonData> {
    check_dims(graph, scores)?;
    let w = scores.w();
    let y = graph
        .edges()
        .iter()
        .map(|&(i, j)| w[j] / (w[i] + w[j]))
        .collect();
    ComparisonData::from_frequencies(graph.clone(), None, y)
}
