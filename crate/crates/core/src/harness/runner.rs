use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{rel_l2_error, rel_linf_error, topk_accuracy};
use crate::mle::fit_mle;
use crate::model::{generate_er_graph, sample_comparisons, ComparisonData};
use crate::ranking::{EstimateScale, RankingResult};
use crate::seed::{stream, Seed};
use crate::spectral::{build_transition, default_max_iters, stationary, DEFAULT_TOL};

use super::config::{ExperimentConfig, Method, SweepPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialStatus {
    Ok,
    Disconnected,
    NoConvergence,
    Failed,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Disconnected => "disconnected",
            TrialStatus::NoConvergence => "no_convergence",
            TrialStatus::Failed => "failed",
        }
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::Disconnected => TrialStatus::Disconnected,
            Error::NoConvergence { .. } => TrialStatus::NoConvergence,
            _ => TrialStatus::Failed,
        }
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimation outcome of one method in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub rel_linf: f64,
    pub rel_l2: f64,
    pub topk_exact: bool,
    pub iterations: usize,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point_index: usize,
    pub point: SweepPoint,
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub trial: usize,
    pub seed: Seed,
    pub status: TrialStatus,
    /// Present only when `status` is ok.
    pub metrics: Option<TrialMetrics>,
    pub seconds: Option<f64>,
}

pub const CSV_HEADER: &str = "n,p,L,K,delta,method,trial,rel_linf,rel_l2,topk_exact,iters,seconds,seed,status";

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        let m = self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.point.p,
            self.point.l,
            self.k,
            opt(self.point.delta),
            self.method,
            self.trial,
            opt(m.map(|m| m.rel_linf)),
            opt(m.map(|m| m.rel_l2)),
            opt(m.map(|m| m.topk_exact as u8)),
            opt(m.map(|m| m.iterations)),
            opt(self.seconds),
            self.seed.value(),
            self.status,
        )
    }
}

/// Draws the graph and comparisons for one trial; every method sees this data.
pub fn trial_data(config: &ExperimentConfig, point: &SweepPoint, seed: Seed) -> Result<ComparisonData> {
    let scores = config.scores_for(point, seed)?;
    let graph = generate_er_graph(config.n, point.p, seed.child(stream::GRAPH))?;
    sample_comparisons(&graph, &scores, point.l, seed.child(stream::COMPARISONS))
}

fn estimate(
    config: &ExperimentConfig,
    point: &SweepPoint,
    data: &ComparisonData,
    method: Method,
) -> Result<(RankingResult, usize)> {
    match config.mle_config(method) {
        None => {
            if !data.graph().is_connected() {
                return Err(Error::Disconnected);
            }
            let d = config.d_rule.resolve(data.graph(), point.p)?;
            let p = build_transition(data, d)?;
            let dist = stationary(&p, DEFAULT_TOL, default_max_iters(data.n()))?;
            let r = RankingResult::from_estimate(dist.pi, EstimateScale::Stationary, config.k)?;
            Ok((r, dist.iterations))
        }
        Some(mle) => {
            let fit = fit_mle(data, &mle)?;
            let r = RankingResult::from_estimate(fit.exp_theta(), EstimateScale::LogScore, config.k)?;
            Ok((r, fit.iterations))
        }
    }
}

/// Runs every configured method on one (point, trial) cell.
pub fn run_trial(config: &ExperimentConfig, point_index: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let point = config.sweep_points()[point_index];
    run_cell(config, point_index, &point, trial)
}

fn run_cell(config: &ExperimentConfig, point_index: usize, point: &SweepPoint, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = config.trial_seed(trial);
    let scores = config.scores_for(point, seed)?;
    let truth = scores.top_k(config.k)?;
    let data = trial_data(config, point, seed)?;
    let connected = data.graph().is_connected();
    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let outcome = if connected {
            estimate(config, point, &data, method)
        } else {
            Err(Error::Disconnected)
        };
        let elapsed = start.elapsed().as_secs_f64();
        let (status, metrics) = match outcome {
            Ok((ranking, iterations)) => {
                let reference = match ranking.scale() {
                    EstimateScale::Stationary => scores.normalized(),
                    EstimateScale::LogScore => scores.centered_exp(),
                };
                let metrics = TrialMetrics {
                    rel_linf: rel_linf_error(ranking.estimate(), &reference)?,
                    rel_l2: rel_l2_error(ranking.estimate(), &reference)?,
                    topk_exact: topk_accuracy(&ranking, &truth)? == 1.0,
                    iterations,
                };
                (TrialStatus::Ok, Some(metrics))
            }
            Err(e) if e.is_config_error() => return Err(e),
            Err(e) => (TrialStatus::from_error(&e), None),
        };
        rows.push(TrialRecord {
            point_index,
            point: *point,
            n: config.n,
            k: config.k,
            method,
            trial,
            seed,
            status,
            metrics,
            seconds: config.timings.then_some(elapsed),
        });
    }
    Ok(rows)
}

/// Runs all cells in parallel; rows are ordered by (point, trial, method).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let points = config.sweep_points();
    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|pi| (0..config.trials).map(move |t| (pi, t)))
        .collect();
    let rows: Vec<Vec<TrialRecord>> = cells
        .par_iter()
        .map(|&(pi, t)| run_cell(config, pi, &points[pi], t))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Writes the CSV; a `# generated ...` comment precedes the header when a timestamp is given.
pub fn write_csv<W: Write>(records: &[TrialRecord], mut out: W, timestamp: Option<&str>) -> std::io::Result<()> {
    if let Some(ts) = timestamp {
        writeln!(out, "# generated {ts}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()
}

pub fn write_csv_file(records: &[TrialRecord], path: &Path, timestamp: Option<&str>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(records, BufWriter::new(file), timestamp).map_err(|e| Error::io(path, e))
}

/// CSV text without the timestamp comment line.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated"))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
n = 30
p = [0.3, 0.6]
L = [5, 20]
K = 3
trials = 4
seed = 11
methods = ["spectral", "mle", "mle_unregularized"]
{extra}
[scores]
mode = "uniform_half_one"
"#
        ))
        .unwrap()
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let c = small("");
        let rows = run_experiment(&c).unwrap();
        assert_eq!(rows.len(), 4 * 4 * 3);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.point_index, i / 12);
            assert_eq!(r.trial, (i / 3) % 4);
            assert_eq!(r.method, c.methods[i % 3]);
            assert_eq!(r.seconds, None);
            if let Some(m) = r.metrics {
                assert!(m.rel_linf.is_finite() && m.rel_l2.is_finite());
            }
        }
    }

    #[test]
    fn trial_is_isolated_from_scheduling() {
        let c = small("");
        let rows = run_experiment(&c).unwrap();
        let again = run_trial(&c, 3, 2).unwrap();
        let pos = rows.iter().position(|r| r.point_index == 3 && r.trial == 2).unwrap();
        assert_eq!(&rows[pos..pos + 3], &again[..]);
    }

    #[test]
    fn csv_is_deterministic() {
        let c = small("");
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_experiment(&c).unwrap(), &mut a, Some("1")).unwrap();
        write_csv(&run_experiment(&c).unwrap(), &mut b, Some("2")).unwrap();
        assert_ne!(a, b);
        let (a, b) = (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap());
        assert_eq!(csv_body(&a), csv_body(&b));
        assert!(csv_body(&a).starts_with(CSV_HEADER));
    }

    #[test]
    fn disconnected_trials_are_recorded() {
        let c = ExperimentConfig::from_toml(
            r#"
n = 40
p = 0.02
L = 5
K = 2
trials = 3
[scores]
mode = "uniform_half_one"
"#,
        )
        .unwrap();
        let rows = run_experiment(&c).unwrap();
        assert!(rows.iter().all(|r| r.status == TrialStatus::Disconnected && r.metrics.is_none()));
        assert!(rows[0].csv_row().ends_with(",disconnected"));
        assert_eq!(rows[0].csv_row().split(',').count(), 14);
    }

    #[test]
    fn timings_fill_seconds() {
        let c = small("timings = true");
        let rows = run_experiment(&c).unwrap();
        assert!(rows.iter().all(|r| r.seconds.is_some()));
    }
}
