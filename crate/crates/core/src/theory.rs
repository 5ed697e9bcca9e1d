//! Numerically checkable theory: the eigenvector perturbation bound for
//! transition matrices, Bernoulli divergences, and sample-size thresholds.
//!
//! The thresholds are order-wise statements with unspecified constants. Every
//! constant is an explicit parameter defaulting to 1, and each report carries
//! the formula it evaluated.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{
    absolute_spectral_gap, detailed_balance_violation, generalized_separation, separation_dk,
    PiNormSpace, REVERSIBILITY_TOL,
};
use crate::model::{generate_er_graph, population_frequencies, sample_comparisons, ScoreVector};
use crate::seed::{stream, Seed};
use crate::spectral::{build_transition, default_max_iters, stationary, TransitionMatrix, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationReport {
    /// `||pi - pi_hat||_{pi*}`
    pub lhs: f64,
    /// `||pi^T (P - P_hat)||_{pi*}`
    pub numerator: f64,
    /// `1 - max(lambda_2(P*), -lambda_n(P*)) - ||P - P_hat||_{pi*}`
    pub denom: f64,
    /// `numerator / denom`, infinite when not applicable.
    pub rhs: f64,
    pub applicable: bool,
}

impl PerturbationReport {
    /// `lhs <= rhs` up to an absolute slack for the stationary solves.
    pub fn holds(&self, slack: f64) -> bool {
        !self.applicable || self.lhs <= self.rhs + slack
    }
}

/// Evaluates the perturbation bound with stationary distributions computed by power iteration.
pub fn check_perturbation(
    p: &TransitionMatrix,
    phat: &TransitionMatrix,
    pstar: &TransitionMatrix,
) -> Result<PerturbationReport> {
    let solve = |m: &TransitionMatrix| stationary(m, DEFAULT_TOL, default_max_iters(m.n())).map(|s| s.pi);
    let pistar = solve(pstar)?;
    let viol = detailed_balance_violation(pstar, &pistar);
    if viol > REVERSIBILITY_TOL {
        return Err(Error::NotReversible(viol));
    }
    let pi = solve(p)?;
    let pihat = solve(phat)?;
    perturbation_report(p, phat, pstar, &pi, &pihat, &pistar)
}

/// Evaluates the bound for caller-supplied stationary distributions.
pub fn perturbation_report(
    p: &TransitionMatrix,
    phat: &TransitionMatrix,
    pstar: &TransitionMatrix,
    pi: &[f64],
    pihat: &[f64],
    pistar: &[f64],
) -> Result<PerturbationReport> {
    let n = pstar.n();
    for (m, v) in [(p, pi), (phat, pihat)] {
        if m.n() != n || v.len() != n || pistar.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.n().max(v.len()),
            });
        }
    }
    let space = PiNormSpace::new(pistar.to_vec())?;
    let gap = absolute_spectral_gap(pstar, pistar)?;
    let diff = p.matrix() - phat.matrix();
    let err: Vec<f64> = pi.iter().zip(pihat).map(|(a, b)| a - b).collect();
    let lhs = space.vec_norm(&err)?;
    let numerator = space.vec_norm(&PiNormSpace::row_times(pi, &diff))?;
    let denom = gap - space.mat_norm(&diff)?;
    let applicable = denom > 0.0;
    let rhs = if applicable { numerator / denom } else { f64::INFINITY };
    Ok(PerturbationReport {
        lhs,
        numerator,
        denom,
        rhs,
        applicable,
    })
}

/// A random perturbation instance: population chain plus two sampled chains.
#[derive(Debug, Clone)]
pub struct PerturbationTriple {
    pub scores: ScoreVector,
    pub pstar: TransitionMatrix,
    pub p: TransitionMatrix,
    pub phat: TransitionMatrix,
}

/// Draws a triple on a connected ER graph with `3 <= n <= max_n`.
///
/// Returns `None` when a sampled chain is reducible; callers skip those draws.
pub fn random_triple(seed: Seed, max_n: usize) -> Result<Option<PerturbationTriple>> {
    let mut rng = seed.rng();
    let n = rng.random_range(3..=max_n.max(3));
    let spread: f64 = rng.random_range(0.0..2.0);
    let w = (0..n).map(|_| rng.random_range(-spread..=spread).exp()).collect();
    let scores = ScoreVector::new(w)?;
    let p_edge = rng.random_range(0.3..=1.0);
    let graph = (0..)
        .map(|attempt| generate_er_graph(n, p_edge, seed.child(stream::GRAPH).child(attempt)))
        .find(|g| g.as_ref().map_or(true, |g| g.is_connected()))
        .expect("unbounded search")?;
    let d = graph.d_max() as f64 * rng.random_range(1.05..3.0);
    let pstar = build_transition(&population_frequencies(&graph, &scores)?, d)?;
    let l_range = 10f64.ln()..500f64.ln();
    let l_p = rng.random_range(l_range.clone()).exp().round() as u32;
    let l_phat = rng.random_range(l_range).exp().round() as u32;
    let reuse_population = rng.random_bool(1.0 / 3.0);
    let sampled = |label: u64, l: u32| -> Result<TransitionMatrix> {
        build_transition(&sample_comparisons(&graph, &scores, l, seed.child(label))?, d)
    };
    let p = sampled(stream::SAMPLE_P, l_p)?;
    let phat = if reuse_population {
        pstar.clone()
    } else {
        sampled(stream::SAMPLE_PHAT, l_phat)?
    };
    if !p.is_irreducible() || !phat.is_irreducible() {
        return Ok(None);
    }
    Ok(Some(PerturbationTriple {
        scores,
        pstar,
        p,
        phat,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalsificationSummary {
    pub attempted: usize,
    pub skipped: usize,
    pub applicable: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` among applicable cases.
    pub max_ratio: f64,
}

/// Slack for comparing `lhs` and `rhs`, covering the power-iteration tolerance.
pub const PERTURBATION_SLACK: f64 = 1e-10;

/// Draws random triples until `target` applicable cases have been checked.
pub fn falsify_perturbation(target: usize, max_n: usize, seed: Seed) -> Result<FalsificationSummary> {
    const BATCH: usize = 256;
    let mut summary = FalsificationSummary {
        attempted: 0,
        skipped: 0,
        applicable: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    let mut next = 0usize;
    while summary.applicable < target {
        if summary.attempted > 100 * target.max(1) {
            return Err(Error::InsufficientData(format!(
                "only {} applicable triples after {} attempts",
                summary.applicable, summary.attempted
            )));
        }
        let batch: Vec<Result<Option<PerturbationReport>>> = (next..next + BATCH)
            .into_par_iter()
            .map(|t| {
                let Some(tr) = random_triple(seed.child(t as u64), max_n)? else {
                    return Ok(None);
                };
                check_perturbation(&tr.p, &tr.phat, &tr.pstar).map(Some)
            })
            .collect();
        next += BATCH;
        for r in batch {
            if summary.applicable == target {
                break;
            }
            summary.attempted += 1;
            match r? {
                None => summary.skipped += 1,
                Some(rep) if rep.applicable => {
                    summary.applicable += 1;
                    if !rep.holds(PERTURBATION_SLACK) {
                        summary.violations += 1;
                    }
                    if rep.rhs > 0.0 {
                        summary.max_ratio = summary.max_ratio.max(rep.lhs / rep.rhs);
                    }
                }
                Some(_) => {}
            }
        }
    }
    Ok(summary)
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DegenerateQ(q));
    }
    Ok(())
}

fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// `KL(Bern(p) || Bern(q))`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_prob(p)?;
    check_q(q)?;
    Ok(xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q))
}

/// `chi^2(Bern(p) || Bern(q)) = (p - q)^2 / (q (1 - q))`.
pub fn chi2_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_prob(p)?;
    check_q(q)?;
    Ok((p - q) * (p - q) / (q * (1.0 - q)))
}

/// Pinsker: `TV <= sqrt(KL / 2)`.
pub fn tv_upper_via_pinsker(kl: f64) -> f64 {
    (kl.max(0.0) / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdKind {
    UpperFixedKappa,
    UpperSpectralKappa,
    UpperMleKappa,
    LowerDk,
    LowerDkStar,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 5] = [
        ThresholdKind::UpperFixedKappa,
        ThresholdKind::UpperSpectralKappa,
        ThresholdKind::UpperMleKappa,
        ThresholdKind::LowerDk,
        ThresholdKind::LowerDkStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThresholdKind::UpperFixedKappa => "upper_fixed_kappa",
            ThresholdKind::UpperSpectralKappa => "upper_spectral_kappa",
            ThresholdKind::UpperMleKappa => "upper_mle_kappa",
            ThresholdKind::LowerDk => "lower_dk",
            ThresholdKind::LowerDkStar => "lower_dkstar",
        }
    }

    /// The inequality on `N = n^2 p L / 2` that the report evaluates.
    pub fn formula(self) -> &'static str {
        match self {
            ThresholdKind::UpperFixedKappa => "N >= c1 n log n / Delta_K^2, p > c0 log n / n",
            ThresholdKind::UpperSpectralKappa => "N >= c1 kappa^2 n log n / Delta_K^2, p > c0 log n / n",
            ThresholdKind::UpperMleKappa => "N >= c1 kappa^4 n log n / Delta_K^2, p > c0 log n / n",
            ThresholdKind::LowerDk => {
                "recovery can fail w.p. >= eps when n^2 p L <= 2 c2 ((1 - eps) n log n - 2) / Delta_K^2, c2 = w_min^4 / (4 w_max^4)"
            }
            ThresholdKind::LowerDkStar => {
                "some score vector is indistinguishable when n^2 p L <= (eps^2 / 2) n / (Delta*_K)^2"
            }
        }
    }

    fn is_upper(self) -> bool {
        matches!(
            self,
            ThresholdKind::UpperFixedKappa | ThresholdKind::UpperSpectralKappa | ThresholdKind::UpperMleKappa
        )
    }
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ThresholdKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::BadRegime(s.to_string()))
    }
}

/// Comparison of the available sample size `N = n^2 p L / 2` with a requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub which: ThresholdKind,
    pub required_samples: f64,
    pub available_samples: f64,
    pub satisfied: bool,
    /// For achievability regimes: whether `p > c0 log n / n`.
    pub connectivity: Option<bool>,
    pub formula: &'static str,
}

impl ThresholdReport {
    fn new(which: ThresholdKind, required: f64, available: f64, connectivity: Option<bool>) -> Self {
        ThresholdReport {
            which,
            required_samples: required,
            available_samples: available,
            satisfied: available >= required,
            connectivity,
            formula: which.formula(),
        }
    }

    /// The requirement expressed on `n^2 p L` rather than `N`.
    pub fn required_n2pl(&self) -> f64 {
        2.0 * self.required_samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConstants {
    pub c0: f64,
    pub c1: f64,
}

impl Default for ThresholdConstants {
    fn default() -> Self {
        ThresholdConstants { c0: 1.0, c1: 1.0 }
    }
}

/// `n^2 p L / 2`.
pub fn available_samples(n: usize, p: f64, l: u32) -> f64 {
    let n = n as f64;
    n * n * p * l as f64 / 2.0
}

fn check_instance(n: usize, p: f64, l: u32, scores: &ScoreVector) -> Result<()> {
    check_prob(p)?;
    if l == 0 {
        return Err(Error::ZeroComparisons);
    }
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: scores.len(),
        });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::BadEps(eps));
    }
    Ok(())
}

fn over_squared(num: f64, sep: f64) -> f64 {
    if sep == 0.0 {
        f64::INFINITY
    } else {
        num / (sep * sep)
    }
}

/// Threshold on `n^2 p L` below which top-K recovery fails w.p. at least `eps`.
pub fn lower_dk_threshold(n: usize, eps: f64, delta_k: f64, kappa: f64) -> f64 {
    let n = n as f64;
    let c2 = 1.0 / (4.0 * kappa.powi(4));
    over_squared(2.0 * c2 * ((1.0 - eps) * n * n.ln() - 2.0), delta_k)
}

/// Threshold on `n^2 p L` below which two score vectors with swapped top-K are indistinguishable.
pub fn lower_dkstar_threshold(n: usize, eps: f64, delta_star: f64) -> f64 {
    over_squared(eps * eps / 2.0 * n as f64, delta_star)
}

/// Sufficient `N` for exact recovery in the given achievability regime.
pub fn upper_requirement(n: usize, delta_k: f64, kappa: f64, which: ThresholdKind, c1: f64) -> Result<f64> {
    let factor = match which {
        ThresholdKind::UpperFixedKappa => 1.0,
        ThresholdKind::UpperSpectralKappa => kappa * kappa,
        ThresholdKind::UpperMleKappa => kappa.powi(4),
        other => return Err(Error::BadRegime(other.name().to_string())),
    };
    let n = n as f64;
    Ok(over_squared(c1 * factor * n * n.ln(), delta_k))
}

pub fn lower_bound_dk(n: usize, p: f64, l: u32, scores: &ScoreVector, k: usize, eps: f64) -> Result<ThresholdReport> {
    check_eps(eps)?;
    check_instance(n, p, l, scores)?;
    let t = lower_dk_threshold(n, eps, separation_dk(scores, k)?, scores.kappa());
    Ok(ThresholdReport::new(ThresholdKind::LowerDk, t / 2.0, available_samples(n, p, l), None))
}

pub fn lower_bound_dkstar(
    n: usize,
    p: f64,
    l: u32,
    scores: &ScoreVector,
    k: usize,
    eps: f64,
) -> Result<ThresholdReport> {
    check_eps(eps)?;
    check_instance(n, p, l, scores)?;
    let t = lower_dkstar_threshold(n, eps, generalized_separation(scores, k)?);
    Ok(ThresholdReport::new(ThresholdKind::LowerDkStar, t / 2.0, available_samples(n, p, l), None))
}

pub fn upper_bound_requirements(
    n: usize,
    p: f64,
    l: u32,
    scores: &ScoreVector,
    k: usize,
    which: ThresholdKind,
    constants: ThresholdConstants,
) -> Result<ThresholdReport> {
    if !which.is_upper() {
        return Err(Error::BadRegime(which.name().to_string()));
    }
    check_instance(n, p, l, scores)?;
    let required = upper_requirement(n, separation_dk(scores, k)?, scores.kappa(), which, constants.c1)?;
    let connected = p > constants.c0 * (n as f64).ln() / n as f64;
    Ok(ThresholdReport::new(which, required, available_samples(n, p, l), Some(connected)))
}
