use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use tsed::harness::report::{read_scores_csv, summarize, write_scores_csv, write_sweep_csv};
use tsed::harness::stats::DEFAULT_THRESHOLD_STEP;
use tsed::harness::sweep::linear_grid;
use tsed::harness::{
    correlation_matrix, evaluate, load_dataset, optimize_threshold, timing_benchmark, weight_sweep,
    Column, EvalConfig, Metric, MetricSelection, MetricVector, Sample,
};
use tsed::llm::{score_pair, stability_report};
use tsed::parser::{GrammarManifest, Registry};
use tsed::{
    bleu, jaccard, tokenize, tsed, BleuConfig, CostConfig, EditOp, Frontend, LabelPolicy,
    LanguageId,
};

mod llm_setup;

use llm_setup::{LlmMode, LlmSession};

/// Tree-based similarity for source code, with token and model baselines.
#[derive(Parser)]
#[command(name = "tsed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one prediction file against one reference file.
    Compare(CompareArgs),
    /// Score every sample of a JSONL dataset.
    Batch(BatchArgs),
    /// Find the score cutoff that best predicts execution match.
    Threshold(ThresholdArgs),
    /// Pearson correlations between metrics and execution match.
    Correlate(CorrelateArgs),
    /// Correlation of TSED with a target while one edit weight varies.
    Sweep(SweepArgs),
    /// Mean time per metric call, per language.
    Bench(BenchArgs),
    /// Drift of model scores across repeated runs.
    Stability(StabilityArgs),
    /// List the registered languages and grammar versions.
    Languages,
}

#[derive(Args, Clone)]
struct ScoringArgs {
    #[arg(long, default_value_t = 1.0, value_parser = parse_weight)]
    delete_weight: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_weight)]
    insert_weight: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_weight)]
    rename_weight: f64,
    /// Highest n-gram order for BLEU.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    bleu_order: u32,
    /// Comma-separated subset of tsed,bleu,jaccard,llm.
    #[arg(long)]
    metrics: Option<MetricSelection>,
    /// Append token text to leaf labels (identifier spellings then count).
    #[arg(long)]
    include_token_text: bool,
    /// Worker threads for scoring.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct LlmArgs {
    #[arg(long, value_enum, default_value_t = LlmMode::Off)]
    llm: LlmMode,
    /// Recorded responses for --llm replay.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Save live responses as a replay fixture file.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Where to write the run manifest (default: next to --out, else stderr).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    prediction: PathBuf,
    reference: PathBuf,
    #[arg(long, value_parser = parse_language)]
    lang: LanguageId,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct BatchArgs {
    dataset: PathBuf,
    /// Per-sample score CSV. The summary JSON always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 if any metric failed on any sample.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct ThresholdArgs {
    /// A dataset (.jsonl) or a score CSV written by `batch`.
    input: PathBuf,
    #[arg(long, default_value = "tsed")]
    metric: Metric,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_STEP)]
    threshold_step: f64,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    /// A dataset (.jsonl) or a score CSV written by `batch`.
    input: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct SweepArgs {
    dataset: PathBuf,
    /// delete, insert or rename.
    #[arg(long, default_value = "insert")]
    op: EditOp,
    #[arg(long, default_value_t = 0.1, value_parser = parse_weight)]
    from: f64,
    #[arg(long, default_value_t = 2.0, value_parser = parse_weight)]
    to: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_positive)]
    step: f64,
    /// Column to correlate with: a metric or execution_match. Defaults to llm
    /// when a model is configured, else execution_match.
    #[arg(long)]
    target: Option<Column>,
    /// Sweep CSV (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct BenchArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    repeats: u32,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct StabilityArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    runs: u32,
    #[command(flatten)]
    llm: LlmArgs,
}

fn parse_weight(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("weight must be finite and >= 0, got {s}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match parse_weight(s)? {
        v if v > 0.0 => Ok(v),
        _ => Err("must be > 0".into()),
    }
}

fn parse_language(s: &str) -> Result<LanguageId, String> {
    LanguageId::new(s).map_err(|_| {
        let known: Vec<String> = Registry::global()
            .languages()
            .iter()
            .map(|l| l.to_string())
            .collect();
        format!("unknown language '{s}' (known: {})", known.join(", "))
    })
}

pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn data(e: impl Display) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compare(args) => compare(args),
        Command::Batch(args) => batch(args),
        Command::Threshold(args) => threshold(args),
        Command::Correlate(args) => correlate(args),
        Command::Sweep(args) => sweep(args),
        Command::Bench(args) => bench(args),
        Command::Stability(args) => stability(args),
        Command::Languages => languages(),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn print_json(value: &impl Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::data(e)),
        _ => Ok(()),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create_file(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn eval_config(scoring: &ScoringArgs, llm_on: bool) -> CliResult<EvalConfig> {
    let metrics = match &scoring.metrics {
        Some(m) => m.clone(),
        None if llm_on => MetricSelection::all(),
        None => MetricSelection::offline(),
    };
    if metrics.contains(Metric::Llm) && !llm_on {
        return Err(Failure::Usage(
            "the llm metric needs --llm replay or --llm live".into(),
        ));
    }
    Ok(EvalConfig {
        metrics,
        costs: CostConfig::new(
            scoring.delete_weight,
            scoring.insert_weight,
            scoring.rename_weight,
        )
        .map_err(|e| Failure::Usage(e.to_string()))?,
        bleu: BleuConfig {
            max_order: scoring.bleu_order as usize,
            ..BleuConfig::default()
        },
        frontend: Frontend::new(
            Registry::global(),
            LabelPolicy {
                include_token_text: scoring.include_token_text,
            },
        ),
        jobs: scoring.jobs,
    })
}

fn open_llm(args: &LlmArgs) -> CliResult<Option<LlmSession>> {
    LlmSession::open(args.llm, args.fixtures.as_deref(), args.record.as_deref())
}

fn finish_llm(
    session: Option<LlmSession>,
    command: &str,
    llm: &LlmArgs,
    out: Option<&Path>,
) -> CliResult {
    let Some(session) = session else {
        return Ok(());
    };
    let default_path = out.map(|p| {
        let mut name = p.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    });
    session.finish(command, llm.manifest.as_deref().or(default_path.as_deref()))
}

fn load_samples(path: &Path) -> CliResult<Vec<Sample>> {
    load_dataset(path).map_err(Failure::data)
}

fn compare(args: CompareArgs) -> CliResult<ExitCode> {
    let session = open_llm(&args.llm)?;
    let cfg = eval_config(&args.scoring, session.is_some())?;
    let prediction = read_file(&args.prediction)?;
    let reference = read_file(&args.reference)?;
    let mut out = serde_json::Map::new();
    out.insert("language".into(), json!(args.lang));
    for &metric in cfg.metrics.metrics() {
        match metric {
            Metric::Tsed => {
                let s = tsed(
                    &cfg.frontend,
                    &prediction,
                    &reference,
                    &args.lang,
                    &cfg.costs,
                )
                .map_err(Failure::data)?;
                out.insert("tsed".into(), json!(s.value));
                out.insert("delta".into(), json!(s.delta));
                out.insert("max_nodes".into(), json!(s.max_nodes));
                out.insert("parse_errors".into(), json!(s.had_parse_errors()));
            }
            Metric::Bleu => {
                let b = bleu(&tokenize(&prediction), &tokenize(&reference), &cfg.bleu)
                    .map_err(Failure::data)?;
                out.insert("bleu".into(), json!(b));
            }
            Metric::Jaccard => {
                out.insert(
                    "jaccard".into(),
                    json!(jaccard(&tokenize(&prediction), &tokenize(&reference))),
                );
            }
            Metric::Llm => {
                let session = session.as_ref().expect("checked in eval_config");
                let display = cfg
                    .frontend
                    .registry()
                    .display_name(&args.lang)
                    .unwrap_or(args.lang.as_str());
                let score = score_pair(display, &prediction, &reference, session.transport())
                    .map_err(Failure::data)?;
                out.insert("llm".into(), json!(score.value));
                out.insert("llm_response".into(), json!(score.raw_response));
            }
        }
    }
    print_json(&out)?;
    finish_llm(session, "compare", &args.llm, None)?;
    Ok(ExitCode::SUCCESS)
}

fn batch(args: BatchArgs) -> CliResult<ExitCode> {
    let session = open_llm(&args.llm)?;
    let cfg = eval_config(&args.scoring, session.is_some())?;
    let samples = load_samples(&args.dataset)?;
    let evaluation =
        evaluate(&samples, &cfg, session.as_ref().map(|s| s.transport())).map_err(Failure::data)?;
    if let Some(path) = &args.out {
        write_scores_csv(create_file(path)?, &evaluation.vectors, &cfg.metrics)
            .map_err(Failure::data)?;
    }
    for f in &evaluation.failures {
        eprintln!(
            "warning: sample {} ({}): {}",
            f.sample_id, f.metric, f.message
        );
    }
    print_json(&summarize(&evaluation, &cfg.metrics))?;
    finish_llm(session, "batch", &args.llm, args.out.as_deref())?;
    if args.strict && !evaluation.failures.is_empty() {
        eprintln!(
            "error: {} metric failure(s) with --strict",
            evaluation.failures.len()
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

/// Score vectors from a score CSV, or by evaluating a dataset.
fn load_vectors(
    input: &Path,
    scoring: &ScoringArgs,
    llm: &LlmArgs,
    command: &str,
) -> CliResult<Vec<MetricVector>> {
    if input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        if llm.llm != LlmMode::Off {
            return Err(Failure::Usage("--llm has no effect on a score CSV".into()));
        }
        let file = std::fs::File::open(input)
            .map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
        return read_scores_csv(file).map_err(Failure::data);
    }
    let session = open_llm(llm)?;
    let cfg = eval_config(scoring, session.is_some())?;
    let samples = load_samples(input)?;
    let evaluation =
        evaluate(&samples, &cfg, session.as_ref().map(|s| s.transport())).map_err(Failure::data)?;
    for f in &evaluation.failures {
        eprintln!(
            "warning: sample {} ({}): {}",
            f.sample_id, f.metric, f.message
        );
    }
    finish_llm(session, command, llm, None)?;
    Ok(evaluation.vectors)
}

fn by_language(vectors: &[MetricVector]) -> BTreeMap<String, Vec<MetricVector>> {
    let mut groups: BTreeMap<String, Vec<MetricVector>> = BTreeMap::new();
    for v in vectors {
        groups
            .entry(v.language.clone())
            .or_default()
            .push(v.clone());
    }
    groups
}

fn threshold(args: ThresholdArgs) -> CliResult<ExitCode> {
    if !(args.threshold_step > 0.0 && args.threshold_step <= 0.5) {
        return Err(Failure::Usage(format!(
            "--threshold-step must be in (0, 0.5], got {}",
            args.threshold_step
        )));
    }
    let vectors = load_vectors(&args.input, &args.scoring, &args.llm, "threshold")?;
    let search = |rows: &[MetricVector]| {
        let (scores, labels): (Vec<f64>, Vec<bool>) = rows
            .iter()
            .filter_map(|v| Some((v.score(args.metric)?, v.execution_match?)))
            .unzip();
        optimize_threshold(&scores, &labels, args.threshold_step)
    };
    let overall = search(&vectors).map_err(|e| Failure::Data(format!("{}: {e}", args.metric)))?;
    let languages: BTreeMap<String, serde_json::Value> = by_language(&vectors)
        .iter()
        .map(|(lang, rows)| {
            let value = match search(rows) {
                Ok(r) => json!(r),
                Err(e) => json!({"error": e.to_string()}),
            };
            (lang.clone(), value)
        })
        .collect();
    print_json(&json!({
        "metric": args.metric,
        "step": args.threshold_step,
        "overall": overall,
        "by_language": languages,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn present_columns(vectors: &[MetricVector]) -> Vec<Column> {
    let mut columns: Vec<Column> = Metric::ALL
        .iter()
        .filter(|&&m| vectors.iter().any(|v| v.score(m).is_some()))
        .map(|&m| Column::Metric(m))
        .collect();
    if vectors.iter().any(|v| v.execution_match.is_some()) {
        columns.push(Column::ExecutionMatch);
    }
    columns
}

fn correlate(args: CorrelateArgs) -> CliResult<ExitCode> {
    let vectors = load_vectors(&args.input, &args.scoring, &args.llm, "correlate")?;
    let columns = present_columns(&vectors);
    let overall = correlation_matrix(&vectors, &columns).map_err(Failure::data)?;
    let languages: BTreeMap<String, serde_json::Value> = by_language(&vectors)
        .iter()
        .map(|(lang, rows)| {
            let value = match correlation_matrix(rows, &columns) {
                Ok(m) => json!(m),
                Err(e) => json!({"error": e.to_string()}),
            };
            (lang.clone(), value)
        })
        .collect();
    print_json(&json!({"overall": overall, "by_language": languages}))?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> CliResult<ExitCode> {
    if args.to < args.from {
        return Err(Failure::Usage("--to must not be below --from".into()));
    }
    let session = open_llm(&args.llm)?;
    let target = args.target.unwrap_or(if session.is_some() {
        Column::Metric(Metric::Llm)
    } else {
        Column::ExecutionMatch
    });
    let samples = load_samples(&args.dataset)?;
    let target_scores: Vec<Option<f64>> = match target {
        Column::ExecutionMatch => samples
            .iter()
            .map(|s| s.execution_match.map(|b| f64::from(u8::from(b))))
            .collect(),
        Column::Metric(metric) => {
            let scoring = ScoringArgs {
                metrics: Some(MetricSelection::new([metric])),
                ..args.scoring.clone()
            };
            let cfg = eval_config(&scoring, session.is_some())?;
            let evaluation = evaluate(&samples, &cfg, session.as_ref().map(|s| s.transport()))
                .map_err(Failure::data)?;
            evaluation.vectors.iter().map(|v| v.score(metric)).collect()
        }
    };
    let frontend = eval_config(
        &ScoringArgs {
            metrics: None,
            ..args.scoring.clone()
        },
        false,
    )?
    .frontend;
    let grid = linear_grid(args.from, args.to, args.step);
    let points =
        weight_sweep(&samples, &frontend, args.op, &grid, &target_scores).map_err(Failure::data)?;
    match &args.out {
        Some(path) => write_sweep_csv(create_file(path)?, &points),
        None => write_sweep_csv(std::io::stdout().lock(), &points),
    }
    .map_err(Failure::data)?;
    finish_llm(session, "sweep", &args.llm, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> CliResult<ExitCode> {
    let session = open_llm(&args.llm)?;
    let cfg = eval_config(&args.scoring, session.is_some())?;
    let samples = load_samples(&args.dataset)?;
    let report = timing_benchmark(
        &samples,
        &cfg,
        args.repeats as usize,
        session.as_ref().map(|s| s.transport()),
    );
    print_json(&report)?;
    finish_llm(session, "bench", &args.llm, None)?;
    Ok(ExitCode::SUCCESS)
}

fn stability(args: StabilityArgs) -> CliResult<ExitCode> {
    let session = open_llm(&args.llm)?
        .ok_or_else(|| Failure::Usage("stability needs --llm replay or --llm live".into()))?;
    let samples = load_samples(&args.dataset)?;
    let cfg = EvalConfig {
        metrics: MetricSelection::new([Metric::Llm]),
        ..EvalConfig::default()
    };
    let mut runs = Vec::new();
    for run in 0..args.runs {
        let evaluation =
            evaluate(&samples, &cfg, Some(session.transport())).map_err(Failure::data)?;
        if let Some(f) = evaluation.failures.first() {
            return Err(Failure::Data(format!(
                "run {}: sample {}: {}",
                run + 1,
                f.sample_id,
                f.message
            )));
        }
        runs.push(
            evaluation
                .vectors
                .iter()
                .map(|v| v.llm.unwrap_or(f64::NAN))
                .collect::<Vec<_>>(),
        );
    }
    let report = stability_report(&runs).map_err(Failure::data)?;
    print_json(&report)?;
    finish_llm(session.into(), "stability", &args.llm, None)?;
    Ok(ExitCode::SUCCESS)
}

fn languages() -> CliResult<ExitCode> {
    let registry = Registry::global();
    let backend = GrammarManifest::builtin().backend;
    let languages: Vec<serde_json::Value> = registry
        .languages()
        .iter()
        .map(|l| {
            let pin = registry.pin(l);
            json!({
                "name": l,
                "display": registry.display_name(l),
                "grammar": pin.map(|p| &p.grammar),
                "version": pin.map(|p| &p.version),
            })
        })
        .collect();
    print_json(&json!({"backend": backend, "languages": languages}))?;
    Ok(ExitCode::SUCCESS)
}
