//! Error norms, the `pi`-weighted geometry, separation measures, Laplacian
//! spectra, and top-K scoring.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{ComparisonGraph, ScoreVector};
use crate::ranking::RankingResult;
use crate::spectral::TransitionMatrix;

const DIST_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
pub const REVERSIBILITY_TOL: f64 = 1e-10;

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

/// `||est - truth||_inf / ||truth||_inf`.
pub fn rel_linf_error(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    let denom = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let num = est
        .iter()
        .zip(truth)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(num / denom)
}

/// `||est - truth||_2 / ||truth||_2`.
pub fn rel_l2_error(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    let denom = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let num = est
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Inner-product space on `R^n` weighted by a strictly positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PiNormSpace {
    pi: Vec<f64>,
}

impl PiNormSpace {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        let total: f64 = pi.iter().sum();
        if pi.is_empty() || pi.iter().any(|v| !(*v > 0.0)) || (total - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidDistribution);
        }
        Ok(PiNormSpace { pi })
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_pair(x, &self.pi)?;
        check_pair(y, &self.pi)?;
        Ok(self
            .pi
            .iter()
            .zip(x.iter().zip(y))
            .map(|(p, (a, b))| p * a * b)
            .sum())
    }

    pub fn vec_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner(x, x)?.sqrt())
    }

    /// `sup_{||x||_pi = 1} ||x^T A||_pi`, computed as the top singular value of
    /// `Pi^{1/2} A^T Pi^{-1/2}`.
    pub fn mat_norm(&self, a: &DMatrix<f64>) -> Result<f64> {
        let n = self.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.nrows().max(a.ncols()),
            });
        }
        let sqrt_pi: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
        let b = DMatrix::from_fn(n, n, |i, j| sqrt_pi[i] * a[(j, i)] / sqrt_pi[j]);
        Ok(b.singular_values().max())
    }

    /// `x^T A` as a vector.
    pub fn row_times(x: &[f64], a: &DMatrix<f64>) -> Vec<f64> {
        let v = a.tr_mul(&DVector::from_column_slice(x));
        v.iter().copied().collect()
    }
}

pub fn pi_inner(space: &PiNormSpace, x: &[f64], y: &[f64]) -> Result<f64> {
    space.inner(x, y)
}

pub fn pi_vec_norm(space: &PiNormSpace, x: &[f64]) -> Result<f64> {
    space.vec_norm(x)
}

pub fn pi_mat_norm(space: &PiNormSpace, a: &DMatrix<f64>) -> Result<f64> {
    space.mat_norm(a)
}

fn boundary(scores: &ScoreVector, k: usize) -> Result<Vec<f64>> {
    let n = scores.len();
    if k == 0 || k >= n {
        return Err(Error::BadK { k, n });
    }
    Ok(scores.sorted_desc())
}

/// `(w_K - w_{K+1}) / w_max` on the descending order of `w` (`K` is 1-based).
pub fn separation_dk(scores: &ScoreVector, k: usize) -> Result<f64> {
    let w = boundary(scores, k)?;
    Ok((w[k - 1] - w[k]) / w[0])
}

/// The generalized separation
/// `(w_K - w_{K+1}) / w_{K+1} * sqrt(1/n * sum_i w_{K+1} w_i / (w_K + w_i)^2)`.
pub fn generalized_separation(scores: &ScoreVector, k: usize) -> Result<f64> {
    let w = boundary(scores, k)?;
    let (wk, wk1) = (w[k - 1], w[k]);
    let n = w.len() as f64;
    let avg = w.iter().map(|wi| wk1 * wi / ((wk + wi) * (wk + wi))).sum::<f64>() / n;
    Ok((wk - wk1) / wk1 * avg.sqrt())
}

/// 1 when the selected set equals `truth` exactly, else 0.
pub fn topk_accuracy(result: &RankingResult, truth: &BTreeSet<usize>) -> Result<f64> {
    if truth.len() != result.k() {
        return Err(Error::BadK {
            k: truth.len(),
            n: result.order().len(),
        });
    }
    Ok(if result.top_k() == truth { 1.0 } else { 0.0 })
}

/// Mean exact-recovery rate over a batch of trials.
pub fn mean_topk_accuracy<'a>(
    results: impl IntoIterator<Item = &'a RankingResult>,
    truth: &BTreeSet<usize>,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in results {
        total += topk_accuracy(r, truth)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no trials".into()));
    }
    Ok(total / count as f64)
}

/// Unnormalized graph Laplacian `sum_{(i,j) in E} (e_i - e_j)(e_i - e_j)^T`.
pub fn laplacian(graph: &ComparisonGraph) -> DMatrix<f64> {
    let n = graph.n();
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i + 1..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Orthonormal basis of `1^perp` (Helmert columns), `n x (n-1)`.
fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |i, k| {
        let m = (k + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        match i.cmp(&(k + 1)) {
            std::cmp::Ordering::Less => 1.0 / norm,
            std::cmp::Ordering::Equal => -m / norm,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

/// Smallest eigenvalue of a symmetric matrix restricted to vectors orthogonal to `1`.
pub fn lambda_min_perp(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    let asym = asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.nrows();
    if n < 2 {
        return Err(Error::TooFewItems(n));
    }
    let q = ones_complement_basis(n);
    let sym = (a + a.transpose()) * 0.5;
    let reduced = q.transpose() * sym * &q;
    Ok(SymmetricEigen::new(reduced).eigenvalues.min())
}

/// Largest detailed-balance violation `|pi_i P_ij - pi_j P_ji|`.
pub fn detailed_balance_violation(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    let n = p.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((pi[i] * p.get(i, j) - pi[j] * p.get(j, i)).abs());
        }
    }
    worst
}

/// Eigenvalues of a chain reversible with respect to `pi`, in descending order.
///
/// Uses the symmetric similarity transform `Pi^{1/2} P Pi^{-1/2}`.
pub fn reversible_spectrum(p: &TransitionMatrix, pi: &[f64]) -> Result<Vec<f64>> {
    check_pair(pi, &vec![0.0; p.n()])?;
    let viol = detailed_balance_violation(p, pi);
    if viol > REVERSIBILITY_TOL {
        return Err(Error::NotReversible(viol));
    }
    let n = p.n();
    let sqrt_pi: Vec<f64> = pi.iter().map(|v| v.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| sqrt_pi[i] * p.get(i, j) / sqrt_pi[j]);
    let s = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// `1 - max(lambda_2, -lambda_n)` of a reversible chain.
pub fn absolute_spectral_gap(p: &TransitionMatrix, pi: &[f64]) -> Result<f64> {
    let eig = reversible_spectrum(p, pi)?;
    let n = eig.len();
    if n < 2 {
        return Err(Error::TooFewItems(n));
    }
    Ok(1.0 - eig[1].max(-eig[n - 1]))
}

/// `gamma = 1 - max(lambda_2(P*), -lambda_n(P*)) - ||P - P*||_{pi*}`.
pub fn spectral_gap_gamma(p: &TransitionMatrix, pstar: &TransitionMatrix, pistar: &[f64]) -> Result<f64> {
    if p.n() != pstar.n() {
        return Err(Error::DimensionMismatch {
            expected: pstar.n(),
            found: p.n(),
        });
    }
    let gap = absolute_spectral_gap(pstar, pistar)?;
    let space = PiNormSpace::new(pistar.to_vec())?;
    let diff = p.matrix() - pstar.matrix();
    Ok(gap - space.mat_norm(&diff)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_scores, population_frequencies};
    use crate::ranking::EstimateScale;
    use crate::spectral::build_transition;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn relative_errors() {
        let t = vec![1.0; 9];
        assert_eq!(rel_linf_error(&t, &t).unwrap(), 0.0);
        let twice: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
        assert_eq!(rel_linf_error(&twice, &t).unwrap(), 1.0);
        assert_relative_eq!(rel_l2_error(&twice, &t).unwrap(), 1.0, epsilon = 1e-15);
        let mut bumped = t.clone();
        bumped[0] += 0.3;
        assert_relative_eq!(rel_linf_error(&bumped, &t).unwrap(), 0.3, epsilon = 1e-15);
        assert_relative_eq!(rel_l2_error(&bumped, &t).unwrap(), 0.3 / 3.0, epsilon = 1e-15);
        assert!(matches!(rel_l2_error(&t, &[0.0; 9]), Err(Error::ZeroTruth)));
        assert!(matches!(rel_linf_error(&t, &[1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pi_space_basics() {
        let s = PiNormSpace::new(vec![0.25; 4]).unwrap();
        assert_relative_eq!(pi_inner(&s, &[1.0; 4], &[1.0; 4]).unwrap(), 1.0);
        let skew = PiNormSpace::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_relative_eq!(pi_mat_norm(&skew, &DMatrix::identity(4, 4)).unwrap(), 1.0, epsilon = 1e-14);
        assert!(PiNormSpace::new(vec![0.5, 0.5, 0.0]).is_err());
        assert!(PiNormSpace::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn pi_mat_norm_matches_random_search() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let space = PiNormSpace::new(raw.iter().map(|v| v / total).collect()).unwrap();
        let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let exact = space.mat_norm(&a).unwrap();
        let mut best = 0.0f64;
        for _ in 0..100_000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ratio = space.vec_norm(&PiNormSpace::row_times(&x, &a)).unwrap() / space.vec_norm(&x).unwrap();
            assert!(ratio <= exact * (1.0 + 1e-12));
            best = best.max(ratio);
        }
        assert!(exact - best < 1e-3, "exact {exact}, search {best}");
    }

    #[test]
    fn separation_examples() {
        let eq = make_scores(vec![1.0; 6]).unwrap();
        assert_eq!(separation_dk(&eq, 2).unwrap(), 0.0);
        assert_eq!(generalized_separation(&eq, 2).unwrap(), 0.0);
        let two_level = ScoreVector::two_level(200, 10, 0.4).unwrap();
        assert_relative_eq!(separation_dk(&two_level, 10).unwrap(), 0.4, epsilon = 1e-15);
        let s = make_scores(vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(separation_dk(&s, 1).unwrap(), 0.5);
        assert!(matches!(separation_dk(&s, 3), Err(Error::BadK { .. })));
        assert!(matches!(generalized_separation(&s, 0), Err(Error::BadK { .. })));
    }

    #[test]
    fn generalized_separation_hand_value() {
        // w = (2, 1): (1/1) * sqrt((1/2) * (1*2/16 + 1*1/9))
        let s = make_scores(vec![2.0, 1.0]).unwrap();
        assert_relative_eq!(generalized_separation(&s, 1).unwrap(), 17f64.sqrt() / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn accuracy_is_exact_set_match() {
        let r = RankingResult::from_estimate(vec![0.4, 0.3, 0.2, 0.1], EstimateScale::Stationary, 2).unwrap();
        assert_eq!(topk_accuracy(&r, &BTreeSet::from([0, 1])).unwrap(), 1.0);
        assert_eq!(topk_accuracy(&r, &BTreeSet::from([0, 2])).unwrap(), 0.0);
        assert!(topk_accuracy(&r, &BTreeSet::from([0])).is_err());
        let batch = [r.clone(), RankingResult::from_estimate(vec![0.1, 0.3, 0.2, 0.4], EstimateScale::Stationary, 2).unwrap()];
        assert_eq!(mean_topk_accuracy(&batch, &BTreeSet::from([0, 1])).unwrap(), 0.5);
    }

    #[test]
    fn laplacian_spectra() {
        for n in 2..8 {
            let l = laplacian(&ComparisonGraph::complete(n).unwrap());
            assert_relative_eq!(lambda_min_perp(&l).unwrap(), n as f64, epsilon = 1e-10);
        }
        let path = laplacian(&ComparisonGraph::new(2, [(0, 1)]).unwrap());
        assert_relative_eq!(lambda_min_perp(&path).unwrap(), 2.0, epsilon = 1e-12);
        let split = laplacian(&ComparisonGraph::new(4, [(0, 1), (2, 3)]).unwrap());
        assert!(lambda_min_perp(&split).unwrap().abs() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(lambda_min_perp(&bad), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn two_state_gamma() {
        let g = ComparisonGraph::complete(2).unwrap();
        let s = make_scores(vec![1.0, 1.0]).unwrap();
        let pstar = build_transition(&population_frequencies(&g, &s).unwrap(), 2.0).unwrap();
        assert_relative_eq!(pstar.get(0, 0), 0.75);
        assert_relative_eq!(pstar.get(0, 1), 0.25);
        let gamma = spectral_gap_gamma(&pstar, &pstar, &s.normalized()).unwrap();
        assert_relative_eq!(gamma, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gamma_rejects_irreversible() {
        let p = TransitionMatrix::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        ))
        .unwrap();
        let pi = vec![1.0 / 3.0; 3];
        assert!(matches!(spectral_gap_gamma(&p, &p, &pi), Err(Error::NotReversible(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn separations_are_scale_invariant(w in prop::collection::vec(0.1f64..10.0, 3..30), k in 1usize..30, c in 0.01f64..100.0) {
            let k = 1 + k % (w.len() - 1);
            let a = make_scores(w.clone()).unwrap();
            let b = make_scores(w.iter().map(|v| v * c).collect()).unwrap();
            prop_assert!((separation_dk(&a, k).unwrap() - separation_dk(&b, k).unwrap()).abs() < 1e-12);
            prop_assert!((generalized_separation(&a, k).unwrap() - generalized_separation(&b, k).unwrap()).abs() < 1e-12);
            prop_assert!(separation_dk(&a, k).unwrap() >= 0.0);
        }

        #[test]
        fn laplacian_is_psd_with_zero_rows(n in 2usize..25, p in 0.0f64..1.0, seed in any::<u64>()) {
            let g = crate::model::generate_er_graph(n, p, crate::seed::Seed::new(seed)).unwrap();
            let l = laplacian(&g);
            for row in l.row_iter() {
                prop_assert_eq!(row.sum(), 0.0);
            }
            let eig = SymmetricEigen::new(l.clone()).eigenvalues;
            prop_assert!(eig.min() > -1e-9);
            let lmp = lambda_min_perp(&l).unwrap();
            prop_assert!(lmp > -1e-9);
            prop_assert_eq!(lmp > 1e-9, g.is_connected());
        }

        #[test]
        fn mat_norm_dominates_probes(seed in any::<u64>(), n in 2usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let space = PiNormSpace::new(raw.iter().map(|v| v / total).collect()).unwrap();
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let norm = space.mat_norm(&a).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ratio = space.vec_norm(&PiNormSpace::row_times(&x, &a)).unwrap() / space.vec_norm(&x).unwrap();
                prop_assert!(ratio <= norm * (1.0 + 1e-10));
            }
        }
    }
}
