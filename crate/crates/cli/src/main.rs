use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use btl_topk::harness::{self, ExperimentConfig, SweepAxis};
use btl_topk::mle::mle_rank;
use btl_topk::model::{generate_er_graph, population_frequencies, read_data, sample_comparisons, write_data};
use btl_topk::seed::stream;
use btl_topk::spectral::{spectral_rank, SpectralOptions};
use btl_topk::theory::{
    falsify_perturbation, lower_bound_dk, lower_bound_dkstar, upper_bound_requirements, ThresholdConstants,
    ThresholdKind, ThresholdReport,
};
use btl_topk::{Error, Result, ScoreVector, Seed};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "btl-topk", version, about = "Top-K ranking from pairwise comparisons")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress and summaries on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a comparison data file.
    Simulate(SimulateArgs),
    /// Rank the items of a comparison data file, one JSON object per line.
    Rank(RankArgs),
    /// Run a Monte-Carlo sweep from a TOML config and write CSV.
    Experiment(ExperimentArgs),
    /// Run the perturbation falsification suite and evaluate sample-size thresholds.
    CheckTheory(CheckTheoryArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Number of items.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Two-level scores: K items at 1 and the rest at 1 - delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Size of the top set for two-level scores and thresholds.
    #[arg(long, short = 'k', default_value_t = 10)]
    k: usize,
}

impl ScoreArgs {
    fn scores(&self, seed: Seed) -> Result<ScoreVector> {
        match self.delta {
            Some(d) => ScoreVector::two_level(self.n, self.k, d),
            None => ScoreVector::uniform_half_one(self.n, seed.child(stream::SCORES)),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scores: ScoreArgs,
    /// Edge probability of the comparison graph.
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    /// Comparisons per edge.
    #[arg(long = "L", default_value_t = 20)]
    l: u32,
    /// Write exact BTL frequencies instead of sampling.
    #[arg(long)]
    population: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the true scores, one per line.
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RankMethod {
    Spectral,
    Mle,
    MleUnregularized,
}

#[derive(Args)]
struct RankArgs {
    /// Comparison data file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "spectral")]
    method: RankMethod,
    /// Only print the top K items.
    #[arg(long, short = 'k')]
    k: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Trial CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the root seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-point summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// gnuplot script reading the summary CSV.
    #[arg(long, requires = "summary")]
    gnuplot: Option<PathBuf>,
    /// Omit the `# generated` timestamp line.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct CheckTheoryArgs {
    /// Applicable random triples to check.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Largest item count of a random triple.
    #[arg(long, default_value_t = 20)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    scores: ScoreArgs,
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    #[arg(long = "L", default_value_t = 20)]
    l: u32,
    /// Failure probability of the lower bounds.
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// JSON report (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_ctx(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf), e)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let seed = Seed::new(a.seed);
    let scores = a.scores.scores(seed)?;
    let graph = generate_er_graph(a.scores.n, a.p, seed.child(stream::GRAPH))?;
    let data = if a.population {
        population_frequencies(&graph, &scores)?
    } else {
        sample_comparisons(&graph, &scores, a.l, seed.child(stream::COMPARISONS))?
    };
    let out = a.out.as_deref();
    write_data(&data, output(out)?).map_err(io_ctx(out))?;
    if let Some(p) = &a.scores_out {
        let mut f = output(Some(p))?;
        for w in scores.w() {
            writeln!(f, "{w}").map_err(|e| Error::io(p, e))?;
        }
        f.flush().map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn rank(a: &RankArgs) -> Result<()> {
    let file = File::open(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let data = read_data(BufReader::new(file))?;
    let n = data.n();
    let k = a.k.unwrap_or(1);
    if k == 0 || k >= n {
        return Err(Error::BadK { k, n });
    }
    let ranking = match a.method {
        RankMethod::Spectral => spectral_rank(&data, k, &SpectralOptions::default())?,
        RankMethod::Mle => mle_rank(&data, k, &Default::default())?,
        RankMethod::MleUnregularized => mle_rank(&data, k, &btl_topk::mle::MleConfig::unregularized())?,
    };
    let shown = a.k.unwrap_or(n);
    let out = a.out.as_deref();
    let mut w = output(out)?;
    for (r, &item) in ranking.order().iter().take(shown).enumerate() {
        let line = json!({ "rank": r + 1, "item": item, "score": ranking.estimate()[item] });
        writeln!(w, "{line}").map_err(io_ctx(out))?;
    }
    w.flush().map_err(io_ctx(out))
}

fn experiment(a: &ExperimentArgs, quiet: bool) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&a.config)?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let records = harness::run_experiment(&config)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string();
    let stamp = (!a.no_timestamp).then_some(stamp.as_str());
    let out = a.out.as_deref();
    harness::write_csv(&records, output(out)?, stamp).map_err(io_ctx(out))?;

    let summaries = harness::summarize(&records);
    if let Some(p) = &a.summary {
        harness::write_summary(&summaries, output(Some(p))?).map_err(|e| Error::io(p, e))?;
        if let Some(g) = &a.gnuplot {
            let script = harness::gnuplot_script(&p.to_string_lossy(), &config.methods);
            std::fs::write(g, script).map_err(|e| Error::io(g, e))?;
        }
    }
    if !quiet {
        for s in &summaries {
            eprintln!(
                "p={} L={} delta={} {:<17} ok={} excluded={} rel_linf={:.4e} rel_l2={:.4e} topk={:.3}",
                s.point.p,
                s.point.l,
                s.point.delta.map_or("-".into(), |d| d.to_string()),
                s.method.name(),
                s.count,
                s.excluded,
                s.rel_linf.map_or(f64::NAN, |m| m.mean),
                s.rel_l2.map_or(f64::NAN, |m| m.mean),
                s.topk_accuracy.unwrap_or(f64::NAN),
            );
        }
        for m in &config.methods {
            if let Ok(fit) = harness::log_error_slope(&summaries, *m, SweepAxis::L) {
                eprintln!("{m}: slope of log rel_linf vs log L = {:.3} (se {:.3})", fit.slope, fit.stderr);
            }
        }
    }
    Ok(())
}

fn report_json(r: &ThresholdReport) -> serde_json::Value {
    json!({
        "which": r.which.name(),
        "required_samples": r.required_samples,
        "available_samples": r.available_samples,
        "satisfied": r.satisfied,
        "connectivity": r.connectivity,
        "formula": r.formula,
    })
}

/// Returns whether the falsification suite found no violation.
fn check_theory(a: &CheckTheoryArgs, quiet: bool) -> Result<bool> {
    let summary = falsify_perturbation(a.trials, a.max_n, Seed::new(a.seed))?;
    let scores = a.scores.scores(Seed::new(a.seed))?;
    let (n, k) = (a.scores.n, a.scores.k);
    let constants = ThresholdConstants { c0: a.c0, c1: a.c1 };
    let mut reports = Vec::new();
    for kind in ThresholdKind::ALL {
        let r = match kind {
            ThresholdKind::LowerDk => lower_bound_dk(n, a.p, a.l, &scores, k, a.eps)?,
            ThresholdKind::LowerDkStar => lower_bound_dkstar(n, a.p, a.l, &scores, k, a.eps)?,
            upper => upper_bound_requirements(n, a.p, a.l, &scores, k, upper, constants)?,
        };
        reports.push(report_json(&r));
    }
    let doc = json!({
        "perturbation": {
            "attempted": summary.attempted,
            "skipped": summary.skipped,
            "applicable": summary.applicable,
            "violations": summary.violations,
            "max_ratio": summary.max_ratio,
        },
        "thresholds": reports,
    });
    let out = a.out.as_deref();
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| io_ctx(out)(e.into()))?;
    writeln!(w).map_err(io_ctx(out))?;
    w.flush().map_err(io_ctx(out))?;
    if !quiet {
        eprintln!(
            "perturbation bound: {} applicable triples, {} violations, max lhs/rhs = {:.4}",
            summary.applicable, summary.violations, summary.max_ratio
        );
    }
    Ok(summary.violations == 0)
}

fn exit_code(e: &Error) -> u8 {
    let input = e.is_config_error()
        || matches!(
            e,
            Error::InvalidProbability(_)
                | Error::TooFewItems(_)
                | Error::ZeroComparisons
                | Error::NonPositiveScore { .. }
                | Error::BadRegime(_)
        );
    if input {
        2
    } else {
        3
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a)?,
        Command::Rank(a) => rank(a)?,
        Command::Experiment(a) => experiment(a, cli.quiet)?,
        Command::CheckTheory(a) => {
            if !check_theory(a, cli.quiet)? {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use btl_topk::harness::Method;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn methods_match_harness_names() {
        use clap::ValueEnum;
        for (m, h) in RankMethod::value_variants().iter().zip(Method::ALL) {
            assert_eq!(m.to_possible_value().unwrap().get_name(), h.name().replace('_', "-"));
        }
    }
}
