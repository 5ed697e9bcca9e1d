use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};

use super::config::{Method, SweepPoint};
use super::runner::{TrialRecord, TrialStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

/// Aggregates of one (sweep point, method) group over its ok trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub point_index: usize,
    pub point: SweepPoint,
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub count: usize,
    /// Trials not ok (disconnected, failed, not converged).
    pub excluded: usize,
    pub rel_linf: Option<MeanStd>,
    pub rel_l2: Option<MeanStd>,
    pub log_rel_linf: Option<MeanStd>,
    pub topk_accuracy: Option<f64>,
    pub mean_iters: Option<f64>,
}

/// Groups by (point, method) in sweep order.
pub fn summarize(records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut groups: BTreeMap<(usize, Method), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.point_index, r.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((point_index, method), rows)| {
            let ok: Vec<_> = rows.iter().filter_map(|r| r.metrics.filter(|_| r.status == TrialStatus::Ok)).collect();
            let col = |f: &dyn Fn(&super::runner::TrialMetrics) -> f64| ok.iter().map(f).collect::<Vec<_>>();
            PointSummary {
                point_index,
                point: rows[0].point,
                n: rows[0].n,
                k: rows[0].k,
                method,
                count: ok.len(),
                excluded: rows.len() - ok.len(),
                rel_linf: MeanStd::of(&col(&|m| m.rel_linf)),
                rel_l2: MeanStd::of(&col(&|m| m.rel_l2)),
                log_rel_linf: MeanStd::of(&col(&|m| m.rel_linf.ln())),
                topk_accuracy: MeanStd::of(&col(&|m| m.topk_exact as u8 as f64)).map(|s| s.mean),
                mean_iters: MeanStd::of(&col(&|m| m.iterations as f64)).map(|s| s.mean),
            }
        })
        .collect()
}

/// Summaries of one method, in sweep order.
pub fn for_method(summaries: &[PointSummary], method: Method) -> Vec<&PointSummary> {
    summaries.iter().filter(|s| s.method == method).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with only two points.
    pub stderr: f64,
}

/// Ordinary least squares `y = a + b x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("slope fit needs 2 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("slope fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    L,
    P,
}

/// Slope of mean `log rel_linf` against `log L` (or `log p`) for one method.
pub fn log_error_slope(summaries: &[PointSummary], method: Method, axis: SweepAxis) -> Result<SlopeFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = for_method(summaries, method)
        .into_iter()
        .filter_map(|s| {
            let x = match axis {
                SweepAxis::L => s.point.l as f64,
                SweepAxis::P => s.point.p,
            };
            s.log_rel_linf.map(|m| (x.ln(), m.mean))
        })
        .unzip();
    ols_slope(&x, &y)
}

pub const SUMMARY_HEADER: &str = "n,p,L,K,delta,method,count,excluded,mean_rel_linf,std_rel_linf,mean_rel_l2,std_rel_l2,mean_log_rel_linf,topk_accuracy,mean_iters";

pub fn write_summary<W: Write>(summaries: &[PointSummary], mut out: W) -> std::io::Result<()> {
    fn o(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.n,
            s.point.p,
            s.point.l,
            s.k,
            o(s.point.delta),
            s.method,
            s.count,
            s.excluded,
            o(s.rel_linf.map(|m| m.mean)),
            o(s.rel_linf.map(|m| m.std)),
            o(s.rel_l2.map(|m| m.mean)),
            o(s.rel_l2.map(|m| m.std)),
            o(s.log_rel_linf.map(|m| m.mean)),
            o(s.topk_accuracy),
            o(s.mean_iters),
        )?;
    }
    out.flush()
}

/// A gnuplot script plotting mean relative l-infinity error against L from a summary CSV.
pub fn gnuplot_script(summary_csv: &str, methods: &[Method]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel 'L'\nset ylabel 'mean relative l-inf error'\n");
    let plots: Vec<String> = methods
        .iter()
        .map(|m| {
            format!(
                "'{summary_csv}' using 3:(strcol(6) eq '{m}' ? $9 : NaN) with linespoints title '{m}'"
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runner::TrialMetrics;
    use crate::seed::Seed;
    use approx::assert_relative_eq;

    #[test]
    fn exact_inverse_sqrt_slope() {
        let x: Vec<f64> = [10.0f64, 20.0, 40.0, 80.0].iter().map(|l| l.ln()).collect();
        let y: Vec<f64> = x.iter().map(|lx| 0.3 - 0.5 * lx).collect();
        let fit = ols_slope(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert_relative_eq!(fit.intercept, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn constant_slope_and_errors() {
        let fit = ols_slope(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(matches!(ols_slope(&[1.0], &[2.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(ols_slope(&[1.0, 1.0], &[2.0, 3.0]), Err(Error::InsufficientData(_))));
        assert!(ols_slope(&[1.0, 2.0], &[2.0, 3.0]).unwrap().stderr.is_nan());
    }

    #[test]
    fn stderr_matches_hand_value() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 7.0];
        let fit = ols_slope(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, 1.7, epsilon = 1e-12);
        let resid: f64 = x.iter().zip(&y).map(|(a, b)| (b - fit.intercept - fit.slope * a).powi(2)).sum();
        assert_relative_eq!(fit.stderr, (resid / 2.0 / 5.0).sqrt(), epsilon = 1e-12);
    }

    fn rec(point_index: usize, l: u32, trial: usize, err: Option<f64>) -> TrialRecord {
        TrialRecord {
            point_index,
            point: SweepPoint { p: 0.5, l, delta: None },
            n: 10,
            k: 2,
            method: Method::Spectral,
            trial,
            seed: Seed::new(0),
            status: if err.is_some() { TrialStatus::Ok } else { TrialStatus::Disconnected },
            metrics: err.map(|e| TrialMetrics {
                rel_linf: e,
                rel_l2: e / 2.0,
                topk_exact: e < 0.15,
                iterations: 3,
            }),
            seconds: None,
        }
    }

    #[test]
    fn summaries_exclude_failures() {
        let rows = vec![
            rec(0, 10, 0, Some(0.2)),
            rec(0, 10, 1, Some(0.1)),
            rec(0, 10, 2, None),
            rec(1, 40, 0, Some(0.1)),
            rec(1, 40, 1, Some(0.05)),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].count, s[0].excluded), (2, 1));
        assert_relative_eq!(s[0].rel_linf.unwrap().mean, 0.15, epsilon = 1e-15);
        assert_relative_eq!(s[0].rel_linf.unwrap().std, 0.05 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s[0].topk_accuracy, Some(0.5));
        let fit = log_error_slope(&s, Method::Spectral, SweepAxis::L).unwrap();
        let expect = (s[1].log_rel_linf.unwrap().mean - s[0].log_rel_linf.unwrap().mean) / 4f64.ln();
        assert_relative_eq!(fit.slope, expect, epsilon = 1e-12);
        assert!(log_error_slope(&s, Method::Mle, SweepAxis::L).is_err());

        let mut out = Vec::new();
        write_summary(&s, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("10,0.5,10,2,,spectral,2,1,"));
    }

    #[test]
    fn gnuplot_mentions_each_method() {
        let s = gnuplot_script("out.csv", &[Method::Spectral, Method::Mle]);
        assert!(s.contains("'spectral'") && s.contains("'mle'"));
        assert!(s.starts_with("set datafile separator"));
    }
}
