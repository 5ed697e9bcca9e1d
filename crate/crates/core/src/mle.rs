//! Ridge-regularized maximum likelihood for the BTL model, solved by
//! constant-step gradient descent.
//!
//! For an edge `(i, j)` stored with `i < j`, the likelihood term is
//! `-y_ij (theta_j - theta_i) + softplus(theta_j - theta_i)`, where `y_ij` is
//! the fraction of comparisons won by `j`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ComparisonData;
use crate::ranking::{EstimateScale, RankingResult};

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `e^x / (1 + e^x)` without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_len(theta: &[f64], data: &ComparisonData) -> Result<()> {
    if theta.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// Negative log-likelihood (unregularized).
pub fn nll(theta: &[f64], data: &ComparisonData) -> Result<f64> {
    check_len(theta, data)?;
    Ok(data
        .iter_edges()
        .map(|(i, j, y)| {
            let diff = theta[j] - theta[i];
            -y * diff + softplus(diff)
        })
        .sum())
}

/// `nll(theta) + lambda / 2 * ||theta||^2`.
pub fn objective(theta: &[f64], data: &ComparisonData, lambda: f64) -> Result<f64> {
    Ok(nll(theta, data)? + 0.5 * lambda * theta.iter().map(|t| t * t).sum::<f64>())
}

fn grad_into(theta: &[f64], data: &ComparisonData, lambda: f64, out: &mut [f64]) {
    for (o, t) in out.iter_mut().zip(theta) {
        *o = lambda * t;
    }
    for (i, j, y) in data.iter_edges() {
        let c = logistic(theta[j] - theta[i]) - y;
        out[j] += c;
        out[i] -= c;
    }
}

pub fn grad_nll(theta: &[f64], data: &ComparisonData) -> Result<Vec<f64>> {
    grad_reg(theta, data, 0.0)
}

pub fn grad_reg(theta: &[f64], data: &ComparisonData, lambda: f64) -> Result<Vec<f64>> {
    check_len(theta, data)?;
    let mut g = vec![0.0; theta.len()];
    grad_into(theta, data, lambda, &mut g);
    Ok(g)
}

/// Hessian of the regularized objective: a weighted graph Laplacian plus `lambda I`.
pub fn hessian(theta: &[f64], data: &ComparisonData, lambda: f64) -> Result<DMatrix<f64>> {
    check_len(theta, data)?;
    let n = theta.len();
    let mut h = DMatrix::from_diagonal_element(n, n, lambda);
    for (i, j, _) in data.iter_edges() {
        let s = logistic(theta[j] - theta[i]);
        let wgt = s * (1.0 - s);
        h[(i, i)] += wgt;
        h[(j, j)] += wgt;
        h[(i, j)] -= wgt;
        h[(j, i)] -= wgt;
    }
    Ok(h)
}

/// `c_lambda * sqrt(n p log(n) / L)`.
pub fn auto_lambda(n: usize, p_est: f64, l: u32, c_lambda: f64) -> f64 {
    c_lambda * (n as f64 * p_est * (n as f64).ln() / l as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// `c_lambda * sqrt(n p_est log n / L)` with `p_est` the observed edge density.
    Auto { c_lambda: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub regularization: Regularization,
    /// Gradient step; `None` uses `1 / (lambda + max(n p_est, d_max / 2))`.
    pub step: Option<f64>,
    /// Stop once `||grad||_2` falls to this value; `None` uses `1e-8 n`.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            regularization: Regularization::Auto { c_lambda: 2.0 },
            step: None,
            grad_tol: None,
            max_iters: 1_000_000,
        }
    }
}

impl MleConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        MleConfig {
            regularization: Regularization::Fixed(lambda),
            ..Default::default()
        }
    }

    pub fn unregularized() -> Self {
        Self::with_lambda(0.0)
    }

    /// Resolved `lambda` for the given data.
    pub fn lambda(&self, data: &ComparisonData) -> f64 {
        match self.regularization {
            Regularization::Fixed(l) => l,
            Regularization::Auto { c_lambda } => match data.comparisons() {
                Some(l) => auto_lambda(data.n(), data.graph().edge_density(), l, c_lambda),
                None => 0.0,
            },
        }
    }

    /// Resolved step size for the given data and `lambda`.
    pub fn step(&self, data: &ComparisonData, lambda: f64) -> f64 {
        self.step.unwrap_or_else(|| {
            let g = data.graph();
            let np = g.n() as f64 * g.edge_density();
            1.0 / (lambda + np.max(g.d_max() as f64 / 2.0))
        })
    }

    pub fn grad_tol(&self, n: usize) -> f64 {
        self.grad_tol.unwrap_or(1e-8 * n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    /// Mean-zero log-scores.
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub objective: f64,
    pub lambda: f64,
    pub step: f64,
}

impl MleFit {
    pub fn exp_theta(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.exp()).collect()
    }
}

/// Snapshot passed to the observer of [`fit_mle_observed`] after each update.
#[derive(Debug)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub theta: &'a [f64],
    pub grad: &'a [f64],
    pub objective: f64,
}

pub fn fit_mle(data: &ComparisonData, config: &MleConfig) -> Result<MleFit> {
    fit_mle_observed(data, config, |_| {})
}

/// Gradient descent from `theta = 0`, calling `observer` on the starting
/// point and on every iterate.
pub fn fit_mle_observed(
    data: &ComparisonData,
    config: &MleConfig,
    mut observer: impl FnMut(&Iterate<'_>),
) -> Result<MleFit> {
    let n = data.n();
    if !data.graph().is_connected() {
        return Err(Error::Disconnected);
    }
    let lambda = config.lambda(data);
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    let step = config.step(data, lambda);
    if !(step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let tol = config.grad_tol(n);

    let mut theta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    grad_into(&theta, data, lambda, &mut grad);
    let mut gnorm = norm2(&grad);
    let mut iterations = 0;
    observer(&Iterate {
        iteration: 0,
        theta: &theta,
        grad: &grad,
        objective: objective(&theta, data, lambda)?,
    });
    while gnorm > tol {
        if iterations == config.max_iters {
            return Err(Error::NoConvergence {
                iterations,
                residual: gnorm,
            });
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= step * g;
        }
        iterations += 1;
        grad_into(&theta, data, lambda, &mut grad);
        gnorm = norm2(&grad);
        observer(&Iterate {
            iteration: iterations,
            theta: &theta,
            grad: &grad,
            objective: objective(&theta, data, lambda)?,
        });
    }
    Ok(MleFit {
        objective: objective(&theta, data, lambda)?,
        theta,
        iterations,
        final_grad_norm: gnorm,
        lambda,
        step,
    })
}

pub fn mle_rank(data: &ComparisonData, k: usize, config: &MleConfig) -> Result<RankingResult> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(Error::BadK { k, n });
    }
    let fit = fit_mle(data, config)?;
    RankingResult::from_estimate(fit.theta, EstimateScale::LogScore, k)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
