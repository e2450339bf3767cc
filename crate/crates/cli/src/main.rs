//! `smoothie`: run smoothness-guided tuning experiments, profile datasets,
//! size random-search budgets and compare reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use smoothie::data::load_csv;
use smoothie::experiment::{self, DataSource, DatasetSpec, ExperimentConfig, Generator, Report, Statistics};
use smoothie::hpo::{budget, coverage_lower, coverage_upper, Direction};
use smoothie::learners::FfConfig;
use smoothie::selftest::{criteria, Options};
use smoothie::smoothness::{dataset_profile_with, Optimizer, Profile, ProfileLearner, DEFAULT_RECOMMEND_THRESHOLD};
use smoothie::{Dataset, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "smoothie", version, about = "Smoothness-guided hyper-parameter optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write a JSON report.
    Run(RunArgs),
    /// Compute a dataset's smoothness and recommend an optimizer.
    Profile(ProfileArgs),
    /// Number of random samples needed for a target expected coverage.
    Budget(BudgetArgs),
    /// Rank methods across one or more reports.
    Compare(CompareArgs),
    /// Run the oracle checks and print one line per criterion.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Report path; overrides the config's `output`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long)]
    jobs: Option<usize>,
    /// Probe ordering; overrides the config.
    #[arg(long, value_parser = parse_direction)]
    direction: Option<Direction>,
    /// Also write `runs.csv` and `statistics.csv` into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileBy {
    /// Closed form from class means and pooled covariance.
    Gnb,
    /// One epoch of a small feedforward network.
    Ff,
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthetic {
    Benchmark,
    Blobs,
    Checkerboard,
}

#[derive(Args)]
struct ProfileArgs {
    /// CSV file with a header row.
    #[arg(required_unless_present = "synthetic")]
    dataset: Option<PathBuf>,
    /// Label column name.
    #[arg(long, default_value = "bug")]
    label: String,
    /// Profile a generated dataset instead of a file.
    #[arg(long, conflicts_with = "dataset")]
    synthetic: Option<Synthetic>,
    /// Seed for generated data and the network probe.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest β for which smoothie is recommended.
    #[arg(long, default_value_t = DEFAULT_RECOMMEND_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = ProfileBy::Gnb)]
    learner: ProfileBy,
    /// Print the profile as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BudgetArgs {
    /// Number of search-space dimensions.
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Covered fraction 2k/L per dimension; one value applies to every dimension.
    #[arg(long = "fraction", required = true, num_args = 1..)]
    fractions: Vec<f64>,
    /// Target expected coverage in [0, 1).
    #[arg(long, default_value_t = 0.95)]
    target: f64,
}

#[derive(Args)]
struct CompareArgs {
    /// Report files.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Significance level; defaults to the first report's.
    #[arg(long)]
    alpha: Option<f64>,
    /// Write the per-treatment table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run only these criteria.
    #[arg(long, num_args = 1..)]
    only: Vec<usize>,
    /// Directory holding `ivy.csv` for the defect-prediction check.
    #[arg(long, env = "SMOOTHIE_PROMISE_DIR")]
    promise_dir: Option<PathBuf>,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Budget(a) => cmd_budget(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidGeometry(_) | Error::ExactCoverageImpossible,
        ) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = ExperimentConfig::from_path(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = a.jobs {
        cfg.jobs = jobs;
    }
    if let Some(direction) = a.direction {
        cfg.direction = direction;
    }
    cfg.validate()?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let out = a
        .out
        .or_else(|| cfg.output.as_ref().map(|p| if p.is_absolute() { p.clone() } else { base.join(p) }))
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.json", cfg.name)));

    let report = experiment::run(&cfg, base)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&out, report.to_json()? + "\n").with_context(|| format!("writing {}", out.display()))?;
    log::info!("wrote {}", out.display());
    if let Some(dir) = &a.csv_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("runs.csv"), experiment::runs_csv(&report)?)?;
        std::fs::write(dir.join("statistics.csv"), experiment::statistics_csv(&report.statistics)?)?;
    }

    let t = &report.timing;
    println!("report: {}", out.display());
    println!("runs: {} ({} failed), failed trials: {}", report.runs.len(), report.failed_runs, report.failed_trials);
    println!(
        "time: probe {:.3}s, full {:.3}s, probe fraction {:.3}, total {:.3}s",
        t.probe_secs, t.full_secs, t.probe_fraction, t.total_secs
    );
    print_statistics(&report.statistics);
    Ok(if report.has_failures() { ExitCode::from(EXIT_PARTIAL) } else { ExitCode::SUCCESS })
}

fn profile_data(a: &ProfileArgs) -> anyhow::Result<Dataset> {
    if let Some(generator) = a.synthetic {
        let generator = match generator {
            Synthetic::Benchmark => Generator::Benchmark,
            Synthetic::Blobs => Generator::Blobs,
            Synthetic::Checkerboard => Generator::Checkerboard,
        };
        let spec = DatasetSpec {
            name: format!("{generator:?}").to_lowercase(),
            source: DataSource::Synthetic { generator, seed: a.seed },
            ratio: 0.8,
        };
        return match spec.load(Path::new("."))? {
            smoothie::data::Source::Single(d) => Ok(d),
            smoothie::data::Source::Pair(..) => bail!("generator produced a split pair"),
        };
    }
    let path = a.dataset.as_ref().expect("clap enforces dataset or --synthetic");
    Ok(load_csv(path, &a.label)?)
}

fn cmd_profile(a: ProfileArgs) -> anyhow::Result<ExitCode> {
    if !a.threshold.is_finite() {
        return Err(Error::InvalidParams(format!("threshold must be finite, got {}", a.threshold)).into());
    }
    let data = profile_data(&a)?;
    let learner = match a.learner {
        ProfileBy::Gnb => ProfileLearner::Gnb,
        ProfileBy::Ff => ProfileLearner::Ff(FfConfig { seed: a.seed, ..FfConfig::default() }),
    };
    let profile = dataset_profile_with(&data, a.threshold, &learner)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&profile)?);
    } else {
        print_profile(&data, &profile);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_profile(data: &Dataset, p: &Profile) {
    let c = &p.report.components;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    println!("dataset: {} (m = {}, n = {}, k = {})", data.name(), data.m(), data.n(), data.k());
    println!("beta: {:.6} ({}, {} norm)", p.beta, p.report.learner.name(), p.report.norm_kind);
    println!("  raw beta: {:.6}", c.raw_beta);
    println!("  regularization addend: {:.6}", c.reg_addend);
    println!("  classes k: {}, samples m: {}", c.k, c.m);
    println!("  sup activation norm: {}", opt(c.activation_norm_sup));
    println!("  last-layer weight norm: {}", opt(c.weight_norm));
    println!("  argmax sample: {}", c.argmax_sample.map_or("-".to_string(), |i| i.to_string()));
    let advice = match p.recommendation {
        Optimizer::Smoothie => "use smoothie",
        Optimizer::Standard => "use standard",
    };
    println!("verdict: {}, {advice} (threshold {})", p.label, p.threshold);
}

fn cmd_budget(a: BudgetArgs) -> anyhow::Result<ExitCode> {
    if a.dims == 0 {
        return Err(Error::InvalidGeometry("dims must be >= 1".into()).into());
    }
    let fractions = match a.fractions.len() {
        1 => vec![a.fractions[0]; a.dims],
        n if n == a.dims => a.fractions.clone(),
        n => return Err(Error::InvalidGeometry(format!("got {n} fractions for {} dims", a.dims)).into()),
    };
    let p = budget(&fractions, a.target)?;
    println!("p = {p}");
    let halfwidths: Vec<f64> = fractions.iter().map(|f| f / 2.0).collect();
    let upper = coverage_upper(p, &halfwidths, &vec![1.0; a.dims])?;
    if a.dims == 1 && p > 0 {
        let lower = coverage_lower(p, halfwidths[0], 0.0, 1.0)?;
        println!("expected coverage at p: lower bound {lower:.4}, upper bound {upper:.4}");
    } else {
        println!("expected coverage at p: upper bound {upper:.4}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(a: CompareArgs) -> anyhow::Result<ExitCode> {
    let reports = a.reports.iter().map(|p| Report::from_path(p)).collect::<smoothie::Result<Vec<_>>>()?;
    let alpha = a.alpha.unwrap_or(reports[0].header.alpha);
    let stats = experiment::compare(&reports, alpha)?;
    if stats.blocks.is_empty() {
        bail!("no dataset/learner/metric block has two or more methods to compare");
    }
    print_statistics(&stats);
    if let [only] = reports.as_slice() {
        if alpha == only.header.alpha {
            println!("matches embedded statistics: {}", stats == only.statistics);
        }
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, experiment::statistics_csv(&stats)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_statistics(stats: &Statistics) {
    for b in &stats.blocks {
        println!(
            "\n{} / {} / {} (Kruskal-Wallis H = {:.3}, p = {:.4})",
            b.dataset,
            b.learner,
            b.metric.name(),
            b.ranking.kruskal.h,
            b.ranking.kruskal.p
        );
        println!("  {:<12} {:>10} {:>5} {:>10} {:>4} {:>4} {:>4}", "method", "median", "rank", "adj. p", "win", "tie", "loss");
        for (name, t) in &b.ranking.treatments {
            let p = t.adjusted_p.map_or("-".to_string(), |p| format!("{p:.4}"));
            println!(
                "  {name:<12} {:>10.4} {:>5} {p:>10} {:>4} {:>4} {:>4}",
                t.median, t.rank, t.wins, t.ties, t.losses
            );
        }
    }
    if !stats.summary.is_empty() {
        println!("\nwin/tie/loss against the strongest rival, alpha = {}", stats.alpha);
        for (name, w) in &stats.summary {
            println!("  {name:<12} {:>4} {:>4} {:>4}", w.wins, w.ties, w.losses);
        }
    }
}

fn cmd_selftest(a: SelftestArgs) -> anyhow::Result<ExitCode> {
    let opts = Options { promise_dir: a.promise_dir };
    let mut failed = 0;
    for c in criteria().into_iter().filter(|c| a.only.is_empty() || a.only.contains(&c.id)) {
        let outcome = c.run(&opts);
        println!("{}", c.line(&outcome));
        failed += usize::from(outcome.is_fail());
    }
    println!("selftest: {failed} failing");
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
}
