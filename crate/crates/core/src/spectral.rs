//! Rank Centrality: rank items by the stationary distribution of a random walk
//! that moves from `i` to `j` in proportion to how often `j` beat `i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ComparisonData, ComparisonGraph, UnionFind};
use crate::ranking::{EstimateScale, RankingResult};

const ROW_SUM_TOL: f64 = 1e-12;

/// Dense row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    d: Option<f64>,
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    /// Wraps an arbitrary square matrix after checking it is nonnegative and row-stochastic.
    pub fn from_matrix(p: DMatrix<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::NotStochastic(format!("{}x{} matrix", p.nrows(), p.ncols())));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::NotStochastic(format!("entry {v}")));
        }
        for (i, row) in p.row_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(TransitionMatrix { d: None, p })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// Normalization factor, when the matrix was built from comparison data.
    pub fn d(&self) -> Option<f64> {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    /// Whether the undirected support of the off-diagonal entries is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut uf = UnionFind::new(n);
        let mut components = n;
        for i in 0..n {
            for j in i + 1..n {
                if (self.p[(i, j)] > 0.0 || self.p[(j, i)] > 0.0) && uf.union(i, j) {
                    components -= 1;
                }
            }
        }
        components == 1
    }

    /// Whether every state reaches every other along positive entries.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let w = if forward { self.p[(i, j)] } else { self.p[(j, i)] };
                    if w > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        n > 0 && reach(true) && reach(false)
    }
}

/// Builds `P` with `P_ij = y_ij / d` on edges and the remaining mass on the diagonal.
pub fn build_transition(data: &ComparisonData, d: f64) -> Result<TransitionMatrix> {
    let graph = data.graph();
    let d_max = graph.d_max();
    if !(d > 0.0) || d < d_max as f64 {
        return Err(Error::NormalizationTooSmall { d, d_max });
    }
    let n = graph.n();
    let mut p = DMatrix::zeros(n, n);
    for (i, j, y) in data.iter_edges() {
        p[(i, j)] = y / d;
        p[(j, i)] = (1.0 - y) / d;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| p[(i, j)]).sum();
        p[(i, i)] = 1.0 - off;
    }
    Ok(TransitionMatrix { d: Some(d), p })
}

/// `2 * d_max`, the normalization used in the simulations.
pub fn default_d(graph: &ComparisonGraph) -> Result<f64> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(2.0 * graph.d_max() as f64)
}

/// `c_d * n * p`, the normalization used in the theoretical guarantees.
pub fn cd_np_d(graph: &ComparisonGraph, c_d: f64, p: f64) -> Result<f64> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(c_d * graph.n() as f64 * p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub iterations: usize,
    /// Final `l1` change between successive iterates.
    pub residual: f64,
}

pub const DEFAULT_TOL: f64 = 1e-12;

pub fn default_max_iters(n: usize) -> usize {
    100 * n + 10_000
}

/// Power iteration `pi <- normalize(pi^T P)` from the uniform vector.
pub fn stationary(p: &TransitionMatrix, tol: f64, max_iters: usize) -> Result<StationaryDistribution> {
    if !p.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = p.n();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let mut next = DVector::zeros(n);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        p.p.tr_mul_to(&pi, &mut next);
        let total = next.sum();
        next /= total;
        residual = (&next - &pi).abs().sum();
        std::mem::swap(&mut pi, &mut next);
        if residual <= tol {
            return Ok(StationaryDistribution {
                pi: pi.iter().copied().collect(),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Normalization factor; `None` means `2 * d_max`.
    pub d: Option<f64>,
    pub tol: f64,
    /// `None` means `100 n + 10^4`.
    pub max_iters: Option<usize>,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            d: None,
            tol: DEFAULT_TOL,
            max_iters: None,
        }
    }
}

/// Runs the spectral method; also returns the stationary solve for diagnostics.
pub fn spectral_fit(
    data: &ComparisonData,
    k: usize,
    opts: &SpectralOptions,
) -> Result<(RankingResult, StationaryDistribution)> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(Error::BadK { k, n });
    }
    if !data.graph().is_connected() {
        return Err(Error::Disconnected);
    }
    let d = match opts.d {
        Some(d) => d,
        None => default_d(data.graph())?,
    };
    let p = build_transition(data, d)?;
    let dist = stationary(&p, opts.tol, opts.max_iters.unwrap_or_else(|| default_max_iters(n)))?;
    let ranking = RankingResult::from_estimate(dist.pi.clone(), EstimateScale::Stationary, k)?;
    Ok((ranking, dist))
}

pub fn spectral_rank(data: &ComparisonData, k: usize, opts: &SpectralOptions) -> Result<RankingResult> {
    spectral_fit(data, k, opts).map(|(r, _)| r)
}
