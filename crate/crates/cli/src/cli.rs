//! Command-line interface. [`run`] parses arguments, runs one command and
//! returns the exit code; failures are printed to stderr as JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use heurex_core::analysis::{
    default_stopwords, fleiss_kappa, kappa_table, load_ground_truth, load_ratings, precision_recall_f1,
    rating_distribution, round_half_even, word_count_analysis, Dimension, MetricsReport, RatedText, RatingFormat,
    RatingRecord, DEFAULT_DROP_WORDS, DEFAULT_TOP_K,
};
use heurex_core::condenser::condense;
use heurex_core::llm::{
    ablation_prompt, generate_labels, PromptCondition, PromptOptions, ScriptedTransport, SequenceTransport, SuggestionId,
};
use heurex_core::{
    create_session, render_report_markdown, run_rules, CompletionTransport, CondenseOptions, Engine, Report,
    SessionState,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{AppError, ErrorKind};
use crate::inputs::{load_design, load_guideline_file, read_file, select_guidelines, TransportSpec};

#[derive(Debug, Parser)]
#[command(name = "heurex", version, about = "Heuristic evaluation of UI mockups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a design and write the first-round report.
    Evaluate(EvaluateArgs),
    /// Run another round of a saved session.
    Round(RoundArgs),
    /// Dismiss a suggestion in a saved session.
    Dismiss(DismissArgs),
    /// Run the layout rules and write the raw findings.
    Lint(LintArgs),
    /// Suggest names for groups with placeholder names.
    Labels(LabelsArgs),
    /// Write the evaluation prompt of each ablation condition.
    Ablate(AblateArgs),
    /// Record responses against the prompts an evaluation sends, producing a
    /// file for `--transport scripted:<file>`.
    Record(RecordArgs),
    /// Statistics over evaluation results and ratings.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Serve the session API over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GuidelineArgs {
    /// Built-in guideline sets, comma-separated: nielsen, crowdcrit, semantic.
    #[arg(long, value_delimiter = ',')]
    pub guidelines: Vec<String>,
    /// Extra guidelines: a JSON guideline set or a plain-text list.
    #[arg(long)]
    pub guidelines_file: Option<PathBuf>,
}

impl GuidelineArgs {
    fn resolve(&self, default: &[&str]) -> Result<Vec<heurex_core::GuidelineSet>, AppError> {
        let custom = self.guidelines_file.as_deref().map(load_guideline_file).transpose()?;
        let ids: Vec<String> = if self.guidelines.is_empty() && custom.is_none() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            self.guidelines.clone()
        };
        select_guidelines(&ids, custom)
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub guidelines: GuidelineArgs,
    #[arg(long, default_value = "llm", value_parser = parse_engine)]
    pub engine: Engine,
    /// `scripted:<file>` or `http` (reads HEUREX_API_KEY, HEUREX_ENDPOINT).
    #[arg(long, default_value = "http")]
    pub transport: TransportSpec,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the report as Markdown.
    #[arg(long)]
    pub markdown: Option<PathBuf>,
    /// Save the session here so later rounds can continue it.
    #[arg(long)]
    pub session: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    pub session_id: String,
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    /// Session file, updated in place.
    #[arg(long)]
    pub session: PathBuf,
    /// Updated design for this round.
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[arg(long, default_value = "http")]
    pub transport: TransportSpec,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub markdown: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DismissArgs {
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long)]
    pub suggestion: String,
    /// Seconds since the Unix epoch; defaults to now.
    #[arg(long)]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LintArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub guidelines: GuidelineArgs,
    /// Only `rules` is supported.
    #[arg(long, default_value = "rules", value_parser = parse_engine)]
    pub engine: Engine,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelsArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, default_value = "http")]
    pub transport: TransportSpec,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub guidelines: GuidelineArgs,
    /// One condition, or `all`.
    #[arg(long, default_value = "all")]
    pub condition: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for `<condition>.json` prompt files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub guidelines: GuidelineArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON array of responses in call order: evaluation, then rephrasing.
    /// Non-string entries are sent as their JSON text.
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Precision, recall and F1 from a ground-truth CSV (`id,provenance`) or
    /// a JSON object `{"reported", "helpful", "ground_truth"}`.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// Violations the evaluator reported; needed with a ground-truth CSV.
        #[arg(long)]
        reported: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fleiss' kappa from ratings (CSV or JSON lines) or a JSON count table
    /// `{"table": [[...]], "raters": n}`.
    Kappa {
        #[arg(long = "in")]
        input: PathBuf,
        /// accuracy or helpfulness; both when omitted.
        #[arg(long, value_parser = parse_dimension)]
        dimension: Option<Dimension>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most frequent words by rating category.
    Words {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        /// Words removed on top of the stopword list.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DROP_WORDS.iter().map(|s| s.to_string()))]
        drop_words: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rating distribution overall, per guideline and per round.
    Ratings {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_dimension)]
        dimension: Option<Dimension>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "http")]
    pub transport: TransportSpec,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Persist sessions as `<id>.json` files here.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    Engine::parse(s).ok_or_else(|| format!("unknown engine `{s}` (expected llm or rules)"))
}

fn parse_dimension(s: &str) -> Result<Dimension, String> {
    Dimension::parse(s).ok_or_else(|| format!("unknown dimension `{s}` (expected accuracy or helpfulness)"))
}

const ALL_SETS: [&str; 3] = ["nielsen", "crowdcrit", "semantic"];

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn pretty(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

fn write_path(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, value: &impl Serialize) -> Result<(), AppError> {
    let text = pretty(value);
    match path {
        Some(p) => write_path(p, &text),
        None => out.write_all(text.as_bytes()).map_err(|e| AppError::new(ErrorKind::Io, e.to_string())),
    }
}

fn load_session(path: &Path) -> Result<SessionState, AppError> {
    Ok(SessionState::load(&read_file(path)?)?)
}

fn transport_for(engine: Engine, spec: &TransportSpec) -> Result<Arc<dyn CompletionTransport>, AppError> {
    match engine {
        // the rule engine never calls a model
        Engine::Rules => Ok(Arc::new(ScriptedTransport::new())),
        Engine::Llm => spec.open(),
    }
}

fn write_report(out: &mut dyn Write, report: &Report, json: Option<&Path>, markdown: Option<&Path>) -> Result<(), AppError> {
    if let Some(md) = markdown {
        write_path(md, &render_report_markdown(report))?;
    }
    emit(out, json, report)
}

fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let config = Config::load(args.config.as_deref())?;
    let doc = load_design(&args.design)?;
    let sets = args.guidelines.resolve(&["nielsen"])?;
    let transport = transport_for(args.engine, &args.transport)?;
    let mut session = create_session(&args.session_id, doc, sets, args.engine, Some(config.token_budget))?;
    config.apply(&mut session, config.params_from_env());
    session.run_round(None, &transport)?;
    if let Some(path) = &args.session {
        std::fs::write(path, session.save()).map_err(|e| AppError::io(path, e))?;
    }
    let report = Report::latest(&session).expect("a round just ran");
    write_report(out, &report, args.out.as_deref(), args.markdown.as_deref())
}

fn round(args: &RoundArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let mut session = load_session(&args.session)?;
    let updated = args.design.as_deref().map(load_design).transpose()?;
    let transport = transport_for(session.engine, &args.transport)?;
    session.run_round(updated, &transport)?;
    std::fs::write(&args.session, session.save()).map_err(|e| AppError::io(&args.session, e))?;
    let report = Report::latest(&session).expect("a round just ran");
    write_report(out, &report, args.out.as_deref(), args.markdown.as_deref())
}

fn dismiss(args: &DismissArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let mut session = load_session(&args.session)?;
    let id = SuggestionId(args.suggestion.clone());
    let record = session.dismiss(&id, args.timestamp.unwrap_or_else(now))?.clone();
    std::fs::write(&args.session, session.save()).map_err(|e| AppError::io(&args.session, e))?;
    emit(out, None, &json!({"dismissed": record.suggestion_id, "round": record.round}))
}

fn lint(args: &LintArgs, out: &mut dyn Write) -> Result<(), AppError> {
    if args.engine != Engine::Rules {
        return Err(AppError::validation("lint only runs the rules engine"));
    }
    let config = Config::load(args.config.as_deref())?;
    let doc = load_design(&args.design)?;
    let sets = args.guidelines.resolve(&ALL_SETS)?;
    emit(out, args.out.as_deref(), &run_rules(&doc, &sets, &config.rules))
}

fn labels(args: &LabelsArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let config = Config::load(args.config.as_deref())?;
    let doc = load_design(&args.design)?;
    let transport = args.transport.open()?;
    let names = generate_labels(&doc, &transport, &config.params_from_env(), CondenseOptions::default())?;
    emit(out, args.out.as_deref(), &names)
}

fn ablate(args: &AblateArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let config = Config::load(args.config.as_deref())?;
    let conditions: Vec<PromptCondition> = if args.condition == "all" {
        PromptCondition::ALL.to_vec()
    } else {
        let c = PromptCondition::parse(&args.condition)
            .ok_or_else(|| AppError::validation(format!("unknown condition `{}`", args.condition)))?;
        vec![c]
    };
    let doc = load_design(&args.design)?;
    let sets = args.guidelines.resolve(&ALL_SETS)?;
    let ui = condense(&doc, CondenseOptions::default());
    let opts = PromptOptions { token_budget: config.token_budget, ..PromptOptions::default() };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| AppError::io(&args.out_dir, e))?;
    let mut written = Vec::new();
    for condition in conditions {
        let messages = ablation_prompt(condition, &ui, &sets, &opts)?;
        let path = args.out_dir.join(format!("{}.json", condition.as_str()));
        write_path(&path, &pretty(&messages))?;
        written.push(path.display().to_string());
    }
    emit(out, None, &json!({ "written": written }))
}

fn record(args: &RecordArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let config = Config::load(args.config.as_deref())?;
    let doc = load_design(&args.design)?;
    let sets = args.guidelines.resolve(&["nielsen"])?;
    let responses: Vec<Value> = serde_json::from_slice(&read_file(&args.responses)?)
        .map_err(|e| AppError::validation(format!("{}: expected a JSON array: {e}", args.responses.display())))?;
    let responses = responses.into_iter().map(|v| match v {
        Value::String(s) => s,
        other => other.to_string(),
    });
    let transport = SequenceTransport::new(responses);
    let mut session = create_session("record", doc, sets, Engine::Llm, Some(config.token_budget))?;
    config.apply(&mut session, config.params());
    session.run_round(None, &transport)?;
    if transport.remaining() > 0 {
        return Err(AppError::validation(format!("{} responses were not used", transport.remaining())));
    }
    let mut script = transport.to_scripted().to_json();
    script.push('\n');
    match &args.out {
        Some(p) => write_path(p, &script),
        None => out.write_all(script.as_bytes()).map_err(|e| AppError::new(ErrorKind::Io, e.to_string())),
    }
}

/// Metrics with display values rounded to three decimals, ties to even.
#[derive(Debug, Serialize)]
struct MetricsOutput {
    #[serde(flatten)]
    metrics: MetricsReport,
    display: Value,
}

fn display3(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| Value::String(format!("{:.3}", round_half_even(v, 3))))
}

fn metrics_output(metrics: MetricsReport) -> MetricsOutput {
    let display = json!({
        "precision": display3(metrics.precision),
        "recall": display3(metrics.recall),
        "f1": display3(metrics.f1),
    });
    MetricsOutput { metrics, display }
}

fn load_rating_file(path: &Path) -> Result<Vec<RatingRecord>, AppError> {
    let bytes = read_file(path)?;
    Ok(load_ratings(bytes.as_slice(), RatingFormat::from_path(path))?)
}

fn dimensions(d: Option<Dimension>) -> Vec<Dimension> {
    d.map_or_else(|| vec![Dimension::Accuracy, Dimension::Helpfulness], |d| vec![d])
}

fn kappa_json(table: &[Vec<u64>], raters: u64) -> Result<Value, AppError> {
    let kappa = fleiss_kappa(table, raters)?;
    Ok(json!({"kappa": kappa, "display": display3(kappa), "items": table.len(), "raters": raters}))
}

fn analyze(cmd: &AnalyzeCommand, out: &mut dyn Write) -> Result<(), AppError> {
    match cmd {
        AnalyzeCommand::Metrics { input, reported, out: path } => {
            let bytes = read_file(input)?;
            let metrics = if input.extension().is_some_and(|e| e == "json") {
                #[derive(serde::Deserialize)]
                struct Counts {
                    reported: u64,
                    helpful: u64,
                    ground_truth: u64,
                }
                let c: Counts = serde_json::from_slice(&bytes)
                    .map_err(|e| AppError::validation(format!("{}: {e}", input.display())))?;
                precision_recall_f1(c.reported, c.helpful, c.ground_truth)?
            } else {
                let reported =
                    reported.ok_or_else(|| AppError::validation("--reported is required with a ground-truth CSV"))?;
                load_ground_truth(bytes.as_slice())?.metrics(reported)?
            };
            emit(out, path.as_deref(), &metrics_output(metrics))
        }
        AnalyzeCommand::Kappa { input, dimension, out: path } => {
            let result = if input.extension().is_some_and(|e| e == "json") {
                #[derive(serde::Deserialize)]
                struct Table {
                    table: Vec<Vec<u64>>,
                    raters: u64,
                }
                let t: Table = serde_json::from_slice(&read_file(input)?)
                    .map_err(|e| AppError::validation(format!("{}: {e}", input.display())))?;
                kappa_json(&t.table, t.raters)?
            } else {
                let records = load_rating_file(input)?;
                let mut by_dimension = serde_json::Map::new();
                for d in dimensions(*dimension) {
                    let (table, raters) = kappa_table(&records, d)?;
                    by_dimension.insert(json!(d).as_str().unwrap_or_default().to_string(), kappa_json(&table, raters)?);
                }
                Value::Object(by_dimension)
            };
            emit(out, path.as_deref(), &result)
        }
        AnalyzeCommand::Words { input, top_k, drop_words, out: path } => {
            let records = load_rating_file(input)?;
            let corpus = RatedText::from_records(&records);
            let drop: Vec<&str> = drop_words.iter().map(String::as_str).collect();
            emit(out, path.as_deref(), &word_count_analysis(&corpus, *top_k, &default_stopwords(), &drop)?)
        }
        AnalyzeCommand::Ratings { input, dimension, out: path } => {
            let records = load_rating_file(input)?;
            let all: Vec<_> =
                dimensions(*dimension).into_iter().map(|d| rating_distribution(&records, d)).collect::<Result<_, _>>()?;
            emit(out, path.as_deref(), &all)
        }
    }
}

fn serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let config = Config::load(args.config.as_deref())?;
    let transport = args.transport.open()?;
    let state = crate::server::AppState::new(transport, config);
    if let Some(dir) = &args.state_dir {
        state.persist_to(dir)?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::new(ErrorKind::Internal, e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| AppError::new(ErrorKind::Io, format!("bind {}:{}: {e}", args.host, args.port)))?;
        let addr = listener.local_addr().map_err(|e| AppError::new(ErrorKind::Io, e.to_string()))?;
        let _ = writeln!(out, "listening on http://{addr}");
        axum::serve(listener, crate::server::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| AppError::new(ErrorKind::Io, e.to_string()))
    })
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), AppError> {
    match &cli.command {
        Command::Evaluate(a) => evaluate(a, out),
        Command::Round(a) => round(a, out),
        Command::Dismiss(a) => dismiss(a, out),
        Command::Lint(a) => lint(a, out),
        Command::Labels(a) => labels(a, out),
        Command::Ablate(a) => ablate(a, out),
        Command::Record(a) => record(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Serve(a) => serve(a, out),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let error = AppError::validation(e.to_string().trim().to_string());
            let _ = writeln!(err, "{}", error.to_json());
            return error.exit_code();
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
