#![allow(dead_code)]

use btl_topk::model::{generate_er_graph, ComparisonData, ComparisonGraph};
use btl_topk::{ScoreVector, Seed};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

/// Stationary distribution by a direct linear solve: `(P^T - I) pi = 0` with
/// the last equation replaced by `sum(pi) = 1`.
pub fn stationary_lu(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("singular stationary system").iter().copied().collect()
}

/// Negative log-likelihood written out per edge, independent of the crate.
pub fn nll_direct(theta: &[f64], data: &ComparisonData, lambda: f64) -> f64 {
    let mut total = 0.0;
    for &(i, j) in data.graph().edges() {
        let y = data.frequency(i, j).unwrap();
        let pj = (theta[j]).exp() / (theta[i].exp() + theta[j].exp());
        total -= y * pj.ln() + (1.0 - y) * (1.0 - pj).ln();
    }
    total + 0.5 * lambda * theta.iter().map(|t| t * t).sum::<f64>()
}

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Smallest eigenvalue on the complement of `1`, by shifting the `1` direction far up.
pub fn lambda_min_perp_projected(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    let proj = DMatrix::identity(n, n) - &j;
    let m = &proj * a * &proj + j * 1e6;
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn connected_er(n: usize, p: f64, seed: Seed) -> ComparisonGraph {
    (0..)
        .map(|a| generate_er_graph(n, p, seed.child(a)).unwrap())
        .find(|g| g.is_connected())
        .unwrap()
}

/// `w_i = exp(U(-spread, spread))`.
pub fn log_uniform_scores(n: usize, spread: f64, seed: Seed) -> ScoreVector {
    let mut rng = seed.rng();
    ScoreVector::new((0..n).map(|_| rng.random_range(-spread..=spread).exp()).collect()).unwrap()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
