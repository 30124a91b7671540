//! Command-line interface over the screening library.
//!
//! Subcommands: `screen`, `fdr-select`, `simulate`, `pool-build`,
//! `classify`. Reports embed the resolved configuration (defaults included)
//! for provenance; the thread count is deliberately not part of it, since it
//! can never affect report content. Exit codes: 0 success, 1 runtime error,
//! 2 invalid usage.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mkfilter::{
    build_submatrix_pool, evaluate_split, fdr_select_detailed, load_dataset, pool, save_dataset,
    screen_all, top_s, KnnConfig, Label, MetricKind, Scenario, SimulationConfig, Strategy,
};
use output::{atomic_write, fmt_f64};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mkfilter",
    version,
    about = "Screen large pools of metric-space features, control the FDR, simulate, classify"
)]
struct Cli {
    /// Worker threads (default: all cores). Changes wall time only, never
    /// report content.
    #[arg(long, global = true, env = "MKFILTER_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Wasserstein,
    Frobenius,
    Cholesky,
    LogCholesky,
    Precomputed,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Wasserstein => MetricKind::Wasserstein,
            MetricArg::Frobenius => MetricKind::Frobenius,
            MetricArg::Cholesky => MetricKind::Cholesky,
            MetricArg::LogCholesky => MetricKind::LogCholesky,
            MetricArg::Precomputed => MetricKind::Precomputed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Distributional,
    Spd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Merging,
    Voting,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Rank every feature of a dataset by its screening score.
    Screen(ScreenArgs),
    /// Select features with the data-splitting FDR threshold.
    FdrSelect(FdrSelectArgs),
    /// Run a replicated synthetic study and report MMS/selection metrics.
    Simulate(SimulateArgs),
    /// Expand whole covariance matrices into a submatrix feature pool.
    PoolBuild(PoolBuildArgs),
    /// Evaluate a k-NN classifier over selected features.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct ScreenArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV with columns (feature_index, omega_hat, rank).
    #[arg(long)]
    out: PathBuf,
    /// Also report the top-s cutoff with this model size (default ⌊n/ln n⌋).
    #[arg(long)]
    s: Option<usize>,
}

#[derive(Args)]
struct FdrSelectArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Nominal FDR level in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Split count (n1 = n(K-1)/K, n2 = n/K).
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    /// Stabilization exponent for the split statistics.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 1000)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Samples per empirical distribution (distributional scenario).
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// SPD matrix dimension, 3 or 5 (spd scenario).
    #[arg(long = "spd-dim", default_value_t = 3)]
    spd_dim: usize,
    /// Metric; defaults to wasserstein (distributional) or log-cholesky (spd).
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Nominal FDR level; enables the adaptive-threshold selection step.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// json: full report; csv: one row per replicate.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct PoolBuildArgs {
    /// Whole covariance matrices: an spd column CSV (kind=spd m=R).
    #[arg(long)]
    covs: PathBuf,
    /// Label file (kind=labels CSV).
    #[arg(long)]
    labels: PathBuf,
    /// Submatrix order (2 = pairwise regions, 3 = triplewise).
    #[arg(long)]
    q: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::LogCholesky)]
    metric: MetricArg,
    /// Directory receiving the expanded dataset and pool index.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated feature indices to classify with.
    #[arg(long, value_delimiter = ',')]
    selected: Vec<usize>,
    /// JSON file naming the selected features (e.g. an fdr-select report).
    #[arg(long = "selected-file")]
    selected_file: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::Merging)]
    strategy: StrategyArg,
    #[arg(long = "train-fraction", default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, default_value_t = 400)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut problems = Vec::new();
    if let Some(t) = cli.threads {
        if t < 1 {
            problems.push("--threads must be at least 1".to_string());
        }
    }
    validate(&cli.command, &mut problems);
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("mkfilter: invalid usage: {p}");
        }
        return ExitCode::from(2);
    }
    if let Some(t) = cli.threads {
        // Ignore the error from double initialization (tests may reuse the
        // process); the pool size only affects wall time.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mkfilter: error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("mkfilter:   caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}

fn validate(cmd: &Command, problems: &mut Vec<String>) {
    let check_alpha = |alpha: f64, problems: &mut Vec<String>| {
        if !(alpha > 0.0 && alpha < 1.0) {
            problems.push(format!("--alpha must lie in (0, 1), got {alpha}"));
        }
    };
    let check_k_split = |k: usize, problems: &mut Vec<String>| {
        if k < 3 {
            problems.push(format!("--K must be at least 3, got {k}"));
        }
    };
    let check_gamma = |gamma: f64, problems: &mut Vec<String>| {
        if gamma <= 0.0 {
            problems.push(format!("--gamma must be positive, got {gamma}"));
        }
    };
    match cmd {
        Command::Screen(args) => {
            if args.s == Some(0) {
                problems.push("--s must be at least 1".to_string());
            }
        }
        Command::FdrSelect(args) => {
            check_alpha(args.alpha, problems);
            check_k_split(args.k, problems);
            check_gamma(args.gamma, problems);
        }
        Command::Simulate(args) => {
            if let Some(alpha) = args.alpha {
                check_alpha(alpha, problems);
            }
            check_k_split(args.k, problems);
            check_gamma(args.gamma, problems);
            if args.replicates == 0 {
                problems.push("--replicates must be at least 1".to_string());
            }
            if args.n == 0 || args.n % 2 != 0 {
                problems.push(format!("--n must be even and positive, got {}", args.n));
            }
        }
        Command::PoolBuild(args) => {
            if args.q < 2 {
                problems.push(format!("--q must be at least 2, got {}", args.q));
            }
            if matches!(args.metric, MetricArg::Wasserstein | MetricArg::Precomputed) {
                problems.push("--metric must be an spd metric for pool-build".to_string());
            }
        }
        Command::Classify(args) => {
            if args.k == 0 {
                problems.push("--k must be at least 1".to_string());
            }
            if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
                problems.push(format!(
                    "--train-fraction must lie in (0, 1), got {}",
                    args.train_fraction
                ));
            }
            if args.replicates == 0 {
                problems.push("--replicates must be at least 1".to_string());
            }
            if args.selected.is_empty() && args.selected_file.is_none() {
                problems.push("one of --selected / --selected-file is required".to_string());
            }
        }
    }
}

fn run(cmd: Command) -> mkfilter::Result<()> {
    match cmd {
        Command::Screen(args) => run_screen(args),
        Command::FdrSelect(args) => run_fdr_select(args),
        Command::Simulate(args) => run_simulate(args),
        Command::PoolBuild(args) => run_pool_build(args),
        Command::Classify(args) => run_classify(args),
    }
}

fn report_header(command: &str, config: &impl Serialize) -> String {
    format!(
        "#mkfilter-report v1 command={command} config={}",
        serde_json::to_string(config).expect("config serializes")
    )
}

fn run_screen(args: ScreenArgs) -> mkfilter::Result<()> {
    let ds = load_dataset(&args.manifest)?;
    eprintln!("mkfilter: screening {} features over n = {}", ds.p(), ds.n());
    let res = screen_all(&ds)?;
    let s = args.s.unwrap_or_else(|| {
        mkfilter::default_model_size(res.n).clamp(1, res.ranking.len())
    });
    let top = top_s(&res, Some(s))?;
    let config = json!({
        "manifest": args.manifest.display().to_string(),
        "s": s,
    });
    let mut out = String::new();
    out.push_str(&report_header("screen", &config));
    out.push('\n');
    out.push_str("feature_index,omega_hat,rank\n");
    let mut rank_of = vec![0usize; res.ranking.len()];
    for (pos, &j) in res.ranking.iter().enumerate() {
        rank_of[j] = pos + 1;
    }
    for (j, &w) in res.omega_hat.iter().enumerate() {
        out.push_str(&format!("{j},{},{}\n", fmt_f64(w), rank_of[j]));
    }
    atomic_write(&args.out, &out)?;
    eprintln!(
        "mkfilter: wrote {} (top-{s} set: {:?})",
        args.out.display(),
        top
    );
    Ok(())
}

fn run_fdr_select(args: FdrSelectArgs) -> mkfilter::Result<()> {
    let ds = load_dataset(&args.manifest)?;
    eprintln!(
        "mkfilter: fdr-select over p = {}, n = {} (alpha = {})",
        ds.p(),
        ds.n(),
        args.alpha
    );
    let (selection, stats) = fdr_select_detailed(&ds, args.alpha, args.k, args.gamma, args.seed)?;
    let config = json!({
        "manifest": args.manifest.display().to_string(),
        "alpha": args.alpha,
        "K": args.k,
        "gamma": args.gamma,
        "seed": args.seed,
    });
    let report = json!({
        "command": "fdr-select",
        "config": config,
        "split": stats,
        "selection": selection,
    });
    atomic_write(&args.out, &to_pretty_json(&report))?;
    eprintln!(
        "mkfilter: wrote {} ({} features selected)",
        args.out.display(),
        selection.selected.len()
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> mkfilter::Result<()> {
    let metric = args.metric.map(MetricKind::from).unwrap_or(match args.scenario {
        ScenarioArg::Distributional => MetricKind::Wasserstein,
        ScenarioArg::Spd => MetricKind::LogCholesky,
    });
    let mut cfg = match args.scenario {
        ScenarioArg::Distributional => {
            let mut c = SimulationConfig::distributional(args.p, args.n, args.m, args.seed);
            c.metric = metric;
            c
        }
        ScenarioArg::Spd => SimulationConfig::spd(args.p, args.n, args.spd_dim, metric, args.seed),
    };
    cfg.alpha = args.alpha;
    cfg.k_split = args.k;
    cfg.gamma = args.gamma;
    cfg.replicates = args.replicates;
    let scenario_name = match cfg.scenario {
        Scenario::Distributional => "distributional",
        Scenario::Spd => "spd",
    };
    eprintln!(
        "mkfilter: simulating {scenario_name} scenario, p = {}, n = {}, {} replicate(s)",
        cfg.p, cfg.n, cfg.replicates
    );
    let report = mkfilter::run_simulation(&cfg)?;
    match args.format {
        FormatArg::Json => {
            let wrapped = json!({
                "command": "simulate",
                "report": report,
            });
            atomic_write(&args.out, &to_pretty_json(&wrapped))?;
        }
        FormatArg::Csv => {
            let mut out = String::new();
            out.push_str(&report_header("simulate", &report.config));
            out.push('\n');
            let hits = report.config.true_set();
            let hit_cols: Vec<String> =
                hits.iter().map(|j| format!("top_s_hit_{j}")).collect();
            out.push_str(&format!(
                "replicate,mms,fdp,selected_size,{}\n",
                hit_cols.join(",")
            ));
            for rec in &report.per_replicate {
                let fdp = rec.fdp.map(fmt_f64).unwrap_or_default();
                let size = rec
                    .selected_size
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                let flags: Vec<&str> = rec
                    .top_s_hits
                    .iter()
                    .map(|&h| if h { "1" } else { "0" })
                    .collect();
                out.push_str(&format!(
                    "{},{},{fdp},{size},{}\n",
                    rec.replicate,
                    rec.mms,
                    flags.join(",")
                ));
            }
            atomic_write(&args.out, &out)?;
        }
    }
    if let Some(fdr) = report.empirical_fdr {
        eprintln!("mkfilter: empirical FDR = {fdr:.4}");
    }
    eprintln!(
        "mkfilter: MMS quantiles (25/50/75) = {:?}; wrote {}",
        report.mms_quantiles,
        args.out.display()
    );
    Ok(())
}

fn run_pool_build(args: PoolBuildArgs) -> mkfilter::Result<()> {
    let covs = pool::read_spd_column(&args.covs)?;
    let labels = pool::read_labels_file(&args.labels)?;
    eprintln!(
        "mkfilter: expanding {} covariance matrices (R = {}) into q = {} submatrices",
        covs.len(),
        covs.first().map(|c| c.dim()).unwrap_or(0),
        args.q
    );
    let (ds, pool_map) = build_submatrix_pool(&covs, &labels, args.q, args.metric.into())?;
    let manifest = save_dataset(&ds, &args.out_dir)?;
    let config = json!({
        "covs": args.covs.display().to_string(),
        "labels": args.labels.display().to_string(),
        "q": args.q,
        "metric": MetricKind::from(args.metric),
    });
    let mut index = String::new();
    index.push_str(&report_header("pool-build", &config));
    index.push('\n');
    index.push_str("feature_index,regions\n");
    for (j, subset) in pool_map.index_map.iter().enumerate() {
        let regions: Vec<String> = subset.iter().map(|r| r.to_string()).collect();
        index.push_str(&format!("{j},{}\n", regions.join("-")));
    }
    atomic_write(&args.out_dir.join("pool_index.csv"), &index)?;
    eprintln!(
        "mkfilter: wrote {} columns and {}",
        ds.p(),
        manifest.display()
    );
    Ok(())
}

fn read_selected_file(path: &Path) -> mkfilter::Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| mkfilter::Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| mkfilter::Error::Parse {
            file: path.display().to_string(),
            line: e.line(),
            reason: e.to_string(),
        })?;
    let candidate = if value.is_array() {
        Some(&value)
    } else {
        value
            .get("selected")
            .or_else(|| value.get("selection").and_then(|s| s.get("selected")))
    };
    candidate
        .and_then(|v| v.as_array())
        .map(|arr| {
            arr.iter()
                .map(|x| {
                    x.as_u64().map(|u| u as usize).ok_or_else(|| {
                        mkfilter::Error::BadSet(format!("non-integer feature index {x}"))
                    })
                })
                .collect::<mkfilter::Result<Vec<usize>>>()
        })
        .unwrap_or_else(|| {
            Err(mkfilter::Error::BadSet(format!(
                "{} holds no 'selected' index array",
                path.display()
            )))
        })
}

fn run_classify(args: ClassifyArgs) -> mkfilter::Result<()> {
    let ds = load_dataset(&args.manifest)?;
    let mut selected = args.selected.clone();
    if let Some(path) = &args.selected_file {
        selected.extend(read_selected_file(path)?);
    }
    selected.sort_unstable();
    selected.dedup();
    let strategy = match args.strategy {
        StrategyArg::Merging => Strategy::Merging,
        StrategyArg::Voting => Strategy::Voting,
    };
    let cfg = KnnConfig::new(args.k, strategy, selected.clone())?;
    eprintln!(
        "mkfilter: classifying with {} feature(s), k = {}, {} replicate(s)",
        selected.len(),
        args.k,
        args.replicates
    );
    let summary = evaluate_split(&ds, &cfg, args.train_fraction, args.seed, args.replicates)?;
    let config = json!({
        "manifest": args.manifest.display().to_string(),
        "selected": selected,
        "k": args.k,
        "strategy": strategy,
        "train_fraction": args.train_fraction,
        "replicates": args.replicates,
        "seed": args.seed,
        "tie_break": Label::Neg,
    });
    let report = json!({
        "command": "classify",
        "config": config,
        "summary": summary,
    });
    atomic_write(&args.out, &to_pretty_json(&report))?;
    eprintln!(
        "mkfilter: accuracy {:.3} ± {:.3}; wrote {}",
        summary.accuracy.mean,
        summary.accuracy.se,
        args.out.display()
    );
    Ok(())
}

fn to_pretty_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
