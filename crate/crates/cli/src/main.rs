use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use spt_core::accuracy::{format_impact, Accuracy};
use spt_core::backend::{Backend, BackendConfig, BackendKind};
use spt_core::corrector::Variant;
use spt_core::generator;
use spt_core::impact::annotate_with_impact;
use spt_core::trainer::{load_checkpoint, load_latest_checkpoint, Trainer, TrainerConfig};
use spt_core::types::EvalScope;
use spt_core::{datasets, MetaPrompt, SptError, TrainRun};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "spt", about = "Train, evaluate, and inspect supervisory meta-prompts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the training loop and write per-epoch checkpoints
    Train(TrainArgs),
    /// Score a prompt (literal or from a checkpoint) on a dataset
    Eval(EvalArgs),
    /// Print a checkpoint's prompt annotated with impact scores
    ImpactReport(ImpactArgs),
}

#[derive(Args)]
struct BackendArgs {
    /// Backend kind: mock | http
    #[arg(long)]
    backend: Option<String>,
    /// Replay script for the mock backend
    #[arg(long)]
    mock_script: Option<PathBuf>,
    /// Base URL for the HTTP backend
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the HTTP backend
    #[arg(long)]
    model: Option<String>,
    /// Name of the environment variable holding the API key
    #[arg(long)]
    api_key_env: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL dataset of multiple-choice items
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Variant: spt-p | spt-pc | spt-cot | spt-imp
    #[arg(long)]
    variant: Option<String>,
    /// Candidate prompts per epoch
    #[arg(long)]
    candidates: Option<usize>,
    /// Maximum training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for the train/test split
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fraction of items assigned to the train split
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Sampling temperature for candidate generation
    #[arg(long)]
    temperature: Option<f64>,
    /// Question set impact is measured on: train-set | mistake-set
    #[arg(long)]
    impact_scope: Option<String>,
    /// Skip the per-epoch test-set evaluation
    #[arg(long)]
    no_test_eval: bool,
    /// Concurrent generator requests
    #[arg(long)]
    parallelism: Option<usize>,
    /// Starting generator prompt (p0)
    #[arg(long)]
    initial_prompt: Option<String>,
    /// Starting corrector prompt (c0)
    #[arg(long)]
    corrector_prompt: Option<String>,
    /// Resume from the latest checkpoint in --out instead of starting fresh
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    backend: BackendArgs,
}

/// File counterpart of the train flags; every flag has a key here.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    variant: Option<String>,
    candidates: Option<usize>,
    epochs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    train_fraction: Option<f64>,
    temperature: Option<f64>,
    impact_scope: Option<String>,
    test_eval: Option<bool>,
    parallelism: Option<usize>,
    initial_prompt: Option<String>,
    corrector_prompt: Option<String>,
    backend: Option<String>,
    mock_script: Option<PathBuf>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// JSONL dataset of multiple-choice items
    #[arg(long)]
    dataset: PathBuf,
    /// Literal prompt text to score
    #[arg(long, conflicts_with = "checkpoint")]
    prompt: Option<String>,
    /// Checkpoint file or directory; scores its current prompt
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// With --checkpoint, also score the run's initial prompt
    #[arg(long, requires = "checkpoint")]
    compare_initial: bool,
    /// Write per-item outcomes to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Concurrent requests
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ImpactArgs {
    /// Checkpoint file or directory
    #[arg(long)]
    checkpoint: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::ImpactReport(args) => cmd_impact_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 for configuration and artifact problems, 3 for backend failures.
fn exit_code_for(e: &SptError) -> u8 {
    match e {
        SptError::Transport(_)
        | SptError::Provider { .. }
        | SptError::MockMiss(_)
        | SptError::UnparseableAnswer
        | SptError::EmptyAfterParse
        | SptError::AllCandidatesFailed => 3,
        _ => 2,
    }
}

fn backend_config(args: &BackendArgs, file: &FileConfig) -> Result<BackendConfig, SptError> {
    let kind = args
        .backend
        .clone()
        .or_else(|| file.backend.clone())
        .unwrap_or_else(|| "mock".to_string());
    let mut config = BackendConfig::default();
    config.kind = match kind.as_str() {
        "mock" => BackendKind::ScriptedMock,
        "http" => BackendKind::HttpOpenAiCompatible,
        other => {
            return Err(SptError::InvalidConfig(format!(
                "unknown backend `{other}` (expected mock | http)"
            )))
        }
    };
    config.mock_script = args.mock_script.clone().or_else(|| file.mock_script.clone());
    if let Some(endpoint) = args.endpoint.clone().or_else(|| file.endpoint.clone()) {
        config.endpoint = endpoint;
    }
    if let Some(model) = args.model.clone().or_else(|| file.model.clone()) {
        config.model = model;
    }
    if let Some(env) = args.api_key_env.clone().or_else(|| file.api_key_env.clone()) {
        config.api_key_env = env;
    }
    if config.kind == BackendKind::ScriptedMock && config.mock_script.is_none() {
        return Err(SptError::InvalidConfig("mock backend requires --mock-script".into()));
    }
    Ok(config)
}

fn parse_scope(value: &str) -> Result<EvalScope, SptError> {
    match value {
        "train-set" => Ok(EvalScope::TrainSet),
        "mistake-set" => Ok(EvalScope::MistakeSet),
        other => Err(SptError::InvalidConfig(format!(
            "unknown impact scope `{other}` (expected train-set | mistake-set)"
        ))),
    }
}

fn acc_cell(a: &Accuracy) -> String {
    format!("{}/{}", a.correct, a.total)
}

fn print_epoch_table(run: &TrainRun) {
    println!("epoch\ttrain_acc\tcandidate_accs\tselected\ttest_acc\tprompt_len");
    for epoch in &run.epochs {
        let candidates = if epoch.candidates.is_empty() {
            "-".to_string()
        } else {
            epoch
                .candidates
                .iter()
                .map(|c| acc_cell(&c.mistake_set_accuracy))
                .collect::<Vec<_>>()
                .join(",")
        };
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            epoch.epoch,
            acc_cell(&epoch.train_accuracy),
            candidates,
            epoch.selected.map_or("-".to_string(), |i| i.to_string()),
            epoch.test_accuracy.as_ref().map_or("-".to_string(), acc_cell),
            epoch.selected_prompt.text.chars().count(),
        );
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), SptError> {
    let file: FileConfig = match &args.config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| SptError::InvalidConfig(format!("{}: {e}", path.display())))?,
        None => FileConfig::default(),
    };

    let mut trainer = if args.resume {
        let out = args
            .out
            .or(file.out)
            .ok_or_else(|| SptError::InvalidConfig("--resume requires --out".into()))?;
        Trainer::resume(&out)?
    } else {
        let backend = backend_config(&args.backend, &file)?;
        let dataset = args
            .dataset
            .or(file.dataset)
            .ok_or_else(|| SptError::InvalidConfig("missing --dataset".into()))?;
        let defaults = TrainerConfig::default();
        let config = TrainerConfig {
            variant: match args.variant.or(file.variant) {
                Some(v) => Variant::from_str(&v)?,
                None => defaults.variant,
            },
            n_candidates: args.candidates.or(file.candidates).unwrap_or(defaults.n_candidates),
            max_epochs: args.epochs.or(file.epochs).unwrap_or(defaults.max_epochs),
            dataset,
            train_fraction: args
                .train_fraction
                .or(file.train_fraction)
                .unwrap_or(defaults.train_fraction),
            split_seed: args.seed.or(file.seed).unwrap_or(defaults.split_seed),
            generator_backend: backend.clone(),
            corrector_backend: backend,
            initial_generator_prompt: args
                .initial_prompt
                .or(file.initial_prompt)
                .unwrap_or(defaults.initial_generator_prompt),
            initial_corrector_prompt: args
                .corrector_prompt
                .or(file.corrector_prompt)
                .unwrap_or(defaults.initial_corrector_prompt),
            evaluate_test_each_epoch: if args.no_test_eval {
                false
            } else {
                file.test_eval.unwrap_or(defaults.evaluate_test_each_epoch)
            },
            impact_scope: match args.impact_scope.or(file.impact_scope) {
                Some(s) => parse_scope(&s)?,
                None => defaults.impact_scope,
            },
            checkpoint_dir: args.out.or(file.out).unwrap_or(defaults.checkpoint_dir),
            corrector_temperature: args
                .temperature
                .or(file.temperature)
                .unwrap_or(defaults.corrector_temperature),
            parallelism: args.parallelism.or(file.parallelism).unwrap_or(defaults.parallelism),
        };
        Trainer::new(config)?
    };

    let run = trainer.train()?.clone();
    print_epoch_table(&run);

    if !run.ledger.is_empty() {
        let path = run.config.checkpoint_dir.join("ledger.json");
        std::fs::write(&path, serde_json::to_string_pretty(&run.ledger)?)?;
        eprintln!("ledger written to {}", path.display());
    }
    eprintln!("status: {:?}", run.status);
    eprintln!("final prompt: {:?}", run.current_generator_prompt.text);
    if let Some((epoch, acc)) = trainer.best_test_accuracy() {
        eprintln!("best test accuracy: {} (epoch {epoch})", acc_cell(&acc));
    }
    Ok(())
}

fn load_run(path: &Path) -> Result<TrainRun, SptError> {
    if path.is_dir() {
        load_latest_checkpoint(path)
    } else {
        load_checkpoint(path)
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), SptError> {
    let items = datasets::load(&args.dataset)?;
    let backend = Backend::from_config(&backend_config(&args.backend, &FileConfig::default())?)?;

    let mut rows: Vec<(String, MetaPrompt)> = Vec::new();
    match (&args.prompt, &args.checkpoint) {
        (Some(text), None) => rows.push(("prompt".to_string(), MetaPrompt::initial(text.clone()))),
        (None, Some(path)) => {
            let run = load_run(path)?;
            rows.push(("checkpoint".to_string(), run.current_generator_prompt.clone()));
            if args.compare_initial {
                rows.push((
                    "initial".to_string(),
                    MetaPrompt::initial(run.config.initial_generator_prompt.clone()),
                ));
            }
        }
        _ => {
            return Err(SptError::InvalidConfig(
                "provide exactly one of --prompt or --checkpoint".into(),
            ))
        }
    }

    println!("label\tcorrect\ttotal\taccuracy");
    for (label, prompt) in &rows {
        let result = generator::evaluate(&backend, prompt, &items, args.parallelism, 1)?;
        println!(
            "{label}\t{}\t{}\t{}",
            result.accuracy.correct,
            result.accuracy.total,
            result.accuracy.as_f64()
        );
        if let Some(csv_path) = &args.csv {
            let io_err = |e: csv::Error| SptError::Io(std::io::Error::other(e));
            let mut writer = csv::Writer::from_path(csv_path).map_err(io_err)?;
            writer.write_record(["item_id", "given_index", "correct"]).map_err(io_err)?;
            for outcome in &result.per_item {
                writer
                    .write_record([
                        outcome.item_id.as_str(),
                        &outcome.given_index.to_string(),
                        &outcome.correct.to_string(),
                    ])
                    .map_err(io_err)?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

fn cmd_impact_report(args: ImpactArgs) -> Result<(), SptError> {
    let run = load_run(&args.checkpoint)?;
    println!("{}", annotate_with_impact(&run.current_generator_prompt, &run.ledger));
    println!();
    println!("sentence\timpact\tacc_before\tacc_after\tepoch");
    let mut entries: Vec<_> = run.ledger.entries.iter().collect();
    entries.sort_by(|a, b| {
        // descending by impact, exact comparison via cross-multiplication
        (b.impact.num as i128 * a.impact.den as i128)
            .cmp(&(a.impact.num as i128 * b.impact.den as i128))
    });
    for entry in entries {
        println!(
            "{}\t{}\t{}\t{}\t{}",
            entry.sentence,
            format_impact(&entry.impact),
            acc_cell(&entry.acc_before),
            acc_cell(&entry.acc_after),
            entry.epoch,
        );
    }
    Ok(())
}
