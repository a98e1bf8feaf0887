use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};
use intentmfg_core::catalog::ProcessCatalog;
use intentmfg_core::dataset::{
    export_jsonl, generate_dataset, import_jsonl, split_dataset, Dataset, DatasetError, GenerationConfig, SplitSpec,
    TemplatePool,
};
use intentmfg_core::eval::{
    aggregate, matrix_csv, per_key_matrix, read_predictions, render_summary, score_predictions, timing_run, EvalError,
};
use intentmfg_core::graph::{
    apply_requirement, export_cypher, extract_subgraph, graph_diff, load_graph, save_graph, ApplyMode, KnowledgeGraph,
    NodeKind,
};
use intentmfg_core::model::{parse_requirement_model, validate};
use intentmfg_core::translate::{
    EndpointConfig, IntentText, RemoteTranslator, RuleTranslator, TranslationBackend, TranslationFailure,
};
use serde::Serialize;
use serde_json::{json, Map, Value};
use tracing::{info, warn};

use crate::config::{load_catalog, load_ontology, AppConfig, BackendKind};
use crate::error::{ApiError, Exit, Failure};

#[derive(Debug, Parser)]
#[command(name = "intentmfg", version, about = "Intent translation, evaluation and knowledge-graph tooling")]
pub struct Cli {
    /// Process catalog JSON (defaults to the built-in catalog).
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Log level for stderr diagnostics.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate intents, one per line (plain text or {"id","intent"} JSON).
    Translate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendKind::Rule)]
        backend: BackendKind,
        #[arg(long)]
        out: PathBuf,
        /// App config supplying the [endpoint] for the remote backend.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Parse a model file and check it against the catalog.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Generate a synthetic dataset from a TOML generation config.
    GenDataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified train/eval split of a dataset.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        train_out: Option<PathBuf>,
        #[arg(long)]
        eval_out: Option<PathBuf>,
    },
    /// Score predictions against a gold dataset.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        matrix_dir: Option<PathBuf>,
    },
    /// Measure cumulative translation time over growing batches.
    Timing {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendKind::Rule)]
        backend: BackendKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        batches: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Knowledge-graph operations.
    Kg {
        /// Graph JSON to operate on (defaults to the built-in ontology).
        #[arg(long, global = true)]
        graph: Option<PathBuf>,
        #[command(subcommand)]
        action: KgCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Permissive,
}

impl From<ModeArg> for ApplyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Strict => ApplyMode::Strict,
            ModeArg::Permissive => ApplyMode::Permissive,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum KgCommand {
    /// Load and integrity-check the graph, printing a summary.
    Load,
    /// One-hop subgraph around a process.
    Subgraph {
        #[arg(long)]
        goal: String,
    },
    /// Write a model's constraints onto the graph and print the update report.
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
        mode: ModeArg,
        /// Where to save the updated graph; nothing is written otherwise.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Emit Cypher MERGE statements for the graph.
    ExportCypher {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Changes from BEFORE to AFTER.
    Diff { before: PathBuf, after: PathBuf },
    /// Write the graph in canonical form.
    Save {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return Exit::Ok.into();
            }
            let message = e.render().to_string();
            eprintln!("{}", ApiError::bad_request(message.trim()).to_json());
            return Exit::Usage.into();
        }
    };
    let level = match &cli.command {
        Command::Serve { config: Some(path) } => {
            AppConfig::load(path).map(|c| c.log_level).unwrap_or_else(|_| cli.log_level.clone())
        }
        _ => cli.log_level.clone(),
    };
    init_logging(&level);
    match run(cli) {
        Ok(()) => Exit::Ok.into(),
        Err(f) => {
            eprintln!("{}", f.error.to_json());
            f.exit.into()
        }
    }
}

fn init_logging(level: &str) {
    let level = level.parse().unwrap_or(tracing::Level::WARN);
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).with_ansi(false).with_max_level(level).try_init();
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let catalog = || load_catalog(cli.catalog.as_deref());
    match cli.command {
        Command::Translate { input, backend, out, config } => {
            translate_file(&input, &out, backend, config.as_deref(), catalog()?)
        }
        Command::Validate { model } => validate_file(&model, &catalog()?),
        Command::GenDataset { config, out } => gen_dataset(&config, &out, &catalog()?),
        Command::Split { input, ratio, seed, train_out, eval_out } => {
            split(&input, ratio, seed, train_out, eval_out)
        }
        Command::Eval { pred, gold, report, matrix_dir } => {
            eval(&pred, &gold, report.as_deref(), matrix_dir.as_deref(), &catalog()?)
        }
        Command::Timing { input, backend, config, batches, out } => {
            timing(&input, backend, config.as_deref(), &batches, out.as_deref(), catalog()?)
        }
        Command::Kg { graph, action } => kg(graph.as_deref(), action, &catalog),
        Command::Serve { config } => {
            let config = match config {
                Some(path) => AppConfig::load(&path)?,
                None => AppConfig { catalog: cli.catalog.clone(), ..AppConfig::default() },
            };
            tokio::runtime::Runtime::new()
                .map_err(|e| Failure::io(e.to_string()))?
                .block_on(crate::service::serve(config))
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::io(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn dataset_failure(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io(e) => Failure::io(e.to_string()),
        other => Failure::validation(ApiError::bad_request(other.to_string())),
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Io(e) => Failure::io(e.to_string()),
        other => Failure::validation(ApiError::bad_request(other.to_string())),
    }
}

fn backend_for(
    kind: BackendKind,
    config: Option<&Path>,
    catalog: ProcessCatalog,
) -> Result<Box<dyn TranslationBackend>, Failure> {
    match kind {
        BackendKind::Rule => Ok(Box::new(RuleTranslator::new(Arc::new(catalog)))),
        BackendKind::Remote => {
            let path = config.ok_or_else(|| Failure::usage("--backend remote needs --config with an [endpoint]"))?;
            let endpoint: EndpointConfig = AppConfig::load(path)?
                .endpoint
                .ok_or_else(|| Failure::usage(format!("{} has no [endpoint] section", path.display())))?;
            Ok(Box::new(RemoteTranslator::new(endpoint).map_err(Failure::usage)?))
        }
    }
}

/// One input line: `(id, text)`. JSON objects supply their own id.
fn intent_lines(text: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('{') {
            let v: Value = serde_json::from_str(trimmed)
                .map_err(|e| Failure::validation(ApiError::bad_request(format!("line {}: {e}", n + 1))))?;
            let field = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_owned);
            match (field("id"), field("intent")) {
                (Some(id), Some(intent)) => out.push((id, intent)),
                _ => {
                    return Err(Failure::validation(ApiError::bad_request(format!(
                        "line {}: JSON input lines need string `id` and `intent`",
                        n + 1
                    ))))
                }
            }
        } else {
            out.push(((n + 1).to_string(), trimmed.to_string()));
        }
    }
    Ok(out)
}

fn translate_file(
    input: &Path,
    out: &Path,
    kind: BackendKind,
    config: Option<&Path>,
    catalog: ProcessCatalog,
) -> Result<(), Failure> {
    let lines = intent_lines(&read_text(input)?)?;
    let backend = backend_for(kind, config, catalog)?;
    let mut w = create(out)?;
    if lines.is_empty() {
        warn!(input = %input.display(), "no intents in input; wrote an empty predictions file");
    }
    let mut transport_failures = 0;
    for (id, text) in &lines {
        let mut row = Map::new();
        row.insert("id".into(), json!(id));
        match IntentText::new(text.as_str()) {
            Ok(intent) => {
                let result = backend.translate(&intent);
                if matches!(result.failure_kind(), Some(TranslationFailure::TransportFailure { .. })) {
                    transport_failures += 1;
                }
                if let Value::Object(fields) = serde_json::to_value(&result).expect("result serializes") {
                    row.extend(fields);
                }
            }
            Err(e) => {
                warn!(%id, error = %e, "skipping invalid intent");
                row.insert("raw_output".into(), json!(""));
                row.insert("model".into(), Value::Null);
                row.insert("failure".into(), json!({"kind": "InvalidIntent", "reason": e.to_string()}));
                row.insert("latency_ms".into(), json!(0.0));
            }
        }
        serde_json::to_writer(&mut w, &row)
            .map_err(|e| Failure::io(e.to_string()))
            .and_then(|_| w.write_all(b"\n").map_err(|e| Failure::io(e.to_string())))?;
    }
    w.flush().map_err(|e| Failure::io(e.to_string()))?;
    info!(count = lines.len(), backend = backend.name(), "translated");
    if transport_failures > 0 {
        return Err(Failure::backend(format!(
            "{transport_failures} of {} intents failed at the transport level; see {}",
            lines.len(),
            out.display()
        )));
    }
    Ok(())
}

fn validate_file(path: &Path, catalog: &ProcessCatalog) -> Result<(), Failure> {
    let model = parse_requirement_model(&read_text(path)?).map_err(Failure::validation)?;
    let report = validate(&model, catalog);
    print_json(&report)?;
    if report.valid {
        Ok(())
    } else {
        let first = &report.violations[0];
        Err(Failure::validation(
            ApiError::bad_request(format!("{} violation(s): {}", report.violations.len(), first.message))
                .at(first.path.clone()),
        ))
    }
}

fn gen_dataset(config: &Path, out: &Path, catalog: &ProcessCatalog) -> Result<(), Failure> {
    let cfg: GenerationConfig =
        toml::from_str(&read_text(config)?).map_err(|e| Failure::usage(format!("invalid generation config: {e}")))?;
    let pool = match &cfg.templates {
        None => TemplatePool::default(),
        Some(p) => {
            let p = config.parent().unwrap_or(Path::new(".")).join(p);
            TemplatePool::load(&p).map_err(dataset_failure)?
        }
    };
    let generated = generate_dataset(&cfg.processes, cfg.seed, catalog, &pool).map_err(dataset_failure)?;
    for w in &generated.warnings {
        warn!("{w}");
    }
    let mut w = create(out)?;
    export_jsonl(&generated.dataset, &mut w).map_err(dataset_failure)?;
    w.flush().map_err(|e| Failure::io(e.to_string()))?;
    print_json(&json!({
        "samples": generated.dataset.len(),
        "per_process": generated.dataset.per_process(),
        "seed": cfg.seed,
        "warnings": generated.warnings,
    }))
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    import_jsonl(open(path)?).map_err(dataset_failure)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.jsonl"))
}

fn split(
    input: &Path,
    ratio: f64,
    seed: u64,
    train_out: Option<PathBuf>,
    eval_out: Option<PathBuf>,
) -> Result<(), Failure> {
    let data = read_dataset(input)?;
    let parts = split_dataset(&data, SplitSpec { train_fraction: ratio, seed }).map_err(dataset_failure)?;
    let train_out = train_out.unwrap_or_else(|| sibling(input, "train"));
    let eval_out = eval_out.unwrap_or_else(|| sibling(input, "eval"));
    for (part, path) in [(&parts.train, &train_out), (&parts.eval, &eval_out)] {
        let mut w = create(path)?;
        export_jsonl(part, &mut w).map_err(dataset_failure)?;
        w.flush().map_err(|e| Failure::io(e.to_string()))?;
    }
    print_json(&json!({
        "train": {"path": train_out, "samples": parts.train.len()},
        "eval": {"path": eval_out, "samples": parts.eval.len()},
    }))
}

fn eval(
    pred: &Path,
    gold: &Path,
    report_path: Option<&Path>,
    matrix_dir: Option<&Path>,
    catalog: &ProcessCatalog,
) -> Result<(), Failure> {
    let preds = read_predictions(open(pred)?).map_err(eval_failure)?;
    let gold = read_dataset(gold)?;
    let (scores, warnings) = score_predictions(&preds, &gold);
    for w in &warnings {
        warn!("{w}");
    }
    let report = aggregate(&scores, catalog);
    if let Some(path) = report_path {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::io(e.to_string()))?;
        write_file(path, &format!("{text}\n"))?;
    }
    if let Some(dir) = matrix_dir {
        for process in report.per_key.keys() {
            let rows = per_key_matrix(&scores, process, catalog);
            write_file(&dir.join(format!("{process}.csv")), &matrix_csv(&rows))?;
        }
    }
    print!("{}", render_summary(&report));
    Ok(())
}

fn timing(
    input: &Path,
    kind: BackendKind,
    config: Option<&Path>,
    batches: &[usize],
    out: Option<&Path>,
    catalog: ProcessCatalog,
) -> Result<(), Failure> {
    let intents: Vec<IntentText> = intent_lines(&read_text(input)?)?
        .into_iter()
        .filter_map(|(_, t)| IntentText::new(t).ok())
        .collect();
    if intents.is_empty() {
        return Err(Failure::validation(ApiError::bad_request("no usable intents in input")));
    }
    let backend = backend_for(kind, config, catalog)?;
    let report = timing_run(backend.as_ref(), &intents, batches);
    if let Some(path) = out {
        write_file(path, &report.csv())?;
    }
    print_json(&report)
}

fn kg(
    graph_path: Option<&Path>,
    action: KgCommand,
    catalog: &dyn Fn() -> Result<ProcessCatalog, Failure>,
) -> Result<(), Failure> {
    let graph = || load_ontology(graph_path);
    match action {
        KgCommand::Load => {
            let g = graph()?;
            let processes: Vec<&str> =
                g.nodes_of_kind(NodeKind::ManufacturingProcess).map(|n| n.name.as_str()).collect();
            print_json(&json!({"nodes": g.node_count(), "edges": g.edge_count(), "processes": processes}))
        }
        KgCommand::Subgraph { goal } => {
            let sub = extract_subgraph(&graph()?, &goal)?;
            print!("{}", sub.to_json());
            Ok(())
        }
        KgCommand::Apply { model, mode, save } => {
            let m = parse_requirement_model(&read_text(&model)?).map_err(Failure::validation)?;
            let report_validity = validate(&m, &catalog()?);
            if !report_validity.valid {
                warn!(violations = report_validity.violations.len(), "model does not validate against the catalog");
            }
            let mut g = graph()?;
            let report = apply_requirement(&mut g, &m, mode.into(), Utc::now())?;
            if let Some(path) = save {
                save_graph(&g, &path)?;
            }
            print_json(&report)
        }
        KgCommand::ExportCypher { out } => {
            let text = export_cypher(&graph()?);
            match out {
                Some(path) => write_file(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        KgCommand::Diff { before, after } => {
            let a: KnowledgeGraph = load_graph(&before)?;
            let b: KnowledgeGraph = load_graph(&after)?;
            print_json(&graph_diff(&a, &b))
        }
        KgCommand::Save { out } => Ok(save_graph(&graph()?, &out)?),
    }
}
