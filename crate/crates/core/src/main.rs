use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use emt::config::RunConfig;
use emt::corpus::{
    generate_split, label_corpus, load_sharc, CorpusFile, CorpusFileError, DialogExample,
    LabeledExample,
};
use emt::evaluator::{end_to_end_eval, evaluate, oracle_qg_eval};
use emt::model::EmtModel;
use emt::rephrase::by_name;
use emt::service::{serve, DialogEngine, SessionManager, SessionStatus};
use emt::trainer::{run_ablation, train_seed};

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(
    name = "emt",
    version,
    about = "Explicit memory tracking for rule-based conversational reading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Training corpus: a normalized corpus file or a ShARC-format JSON file.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Dev corpus, same formats.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Generate the synthetic corpus from the run config instead of reading files.
    #[arg(long, conflicts_with_all = ["train", "dev"])]
    synthetic_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic train/dev pair as normalized corpus files.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train one model per configured seed.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Checkpoints go to `<out>/seed-<n>/`.
        #[arg(long)]
        out: PathBuf,
        /// Line-delimited JSON metrics log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a trained model on a corpus.
    Eval {
        #[arg(value_enum)]
        protocol: Protocol,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "template")]
        rephraser: String,
        /// Write the class-wise accuracy table here as TSV.
        #[arg(long)]
        classwise: Option<PathBuf>,
    },
    /// Train every ablation variant over the configured seeds.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run one dialog state from a JSON file and print the prediction.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// A single dialog example (rule, question, scenario, history).
        #[arg(long)]
        example: PathBuf,
        #[arg(long, default_value = "template")]
        rephraser: String,
    },
    /// Hold a dialog in the terminal.
    Repl {
        #[arg(long)]
        model: PathBuf,
        /// File with the rule text.
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        question: String,
        #[arg(long, default_value = "")]
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the full trace as JSON when the dialog ends.
        #[arg(long)]
        trace: bool,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    /// Predicted decisions and spans; BLEU on mutual Inquire turns.
    EndToEnd,
    /// Gold Inquire turns; BLEU of questions from predicted spans.
    OracleQg,
    /// Both protocols plus entailment and sentence identification.
    All,
}

fn run_config(path: Option<&Path>) -> Result<RunConfig, BoxError> {
    Ok(match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    })
}

/// Reads a normalized corpus file, falling back to ShARC-format JSON.
fn load_corpus(path: &Path) -> Result<Vec<LabeledExample>, BoxError> {
    match CorpusFile::load(path) {
        Ok(c) => Ok(c.examples),
        Err(CorpusFileError::Json(_)) => Ok(label_corpus(load_sharc(path)?)),
        Err(e) => Err(e.into()),
    }
}

fn load_data(
    data: &DataArgs,
    config: &RunConfig,
) -> Result<(Vec<LabeledExample>, Option<Vec<LabeledExample>>), BoxError> {
    if let Some(seed) = data.synthetic_seed {
        let c = generate_split(&config.synthetic, seed);
        return Ok((c.train_labeled(), Some(c.dev_labeled())));
    }
    let train = data
        .train
        .as_deref()
        .ok_or("give --train or --synthetic-seed")?;
    let dev = data.dev.as_deref().map(load_corpus).transpose()?;
    Ok((load_corpus(train)?, dev))
}

fn open_log(path: Option<&Path>) -> Result<Option<BufWriter<File>>, BoxError> {
    Ok(path.map(File::create).transpose()?.map(BufWriter::new))
}

fn engine(model: &Path, config: &RunConfig) -> Result<DialogEngine, BoxError> {
    let model = Arc::new(EmtModel::load(model)?);
    Ok(DialogEngine::new(
        model,
        by_name(&config.rephraser)?,
        config.max_turns,
    ))
}

fn main() -> Result<(), BoxError> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate {
            config,
            seed,
            out_dir,
        } => {
            let config = run_config(config.as_deref())?;
            let corpus = generate_split(&config.synthetic, seed);
            std::fs::create_dir_all(&out_dir)?;
            CorpusFile::new("synthetic-train", corpus.train_labeled())
                .save(out_dir.join("train.json"))?;
            CorpusFile::new("synthetic-dev", corpus.dev_labeled())
                .save(out_dir.join("dev.json"))?;
            println!(
                "wrote {} train and {} dev examples to {}",
                corpus.train.len(),
                corpus.dev.len(),
                out_dir.display()
            );
        }
        Command::Train {
            config,
            data,
            out,
            log,
        } => {
            let config = run_config(config.as_deref())?;
            let (train_set, dev) = load_data(&data, &config)?;
            let mut log = open_log(log.as_deref())?;
            for &seed in &config.train.seeds {
                let run = train_seed(
                    &train_set,
                    dev.as_deref(),
                    &config.train,
                    seed,
                    log.as_mut().map(|w| w as &mut dyn Write),
                )?;
                let dir = out.join(format!("seed-{seed}"));
                run.model.save(&dir)?;
                match &run.dev {
                    Some(e) => println!("seed {seed}: saved to {}\n{}", dir.display(), e.table()),
                    None => println!("seed {seed}: saved to {}", dir.display()),
                }
            }
        }
        Command::Eval {
            protocol,
            model,
            data,
            rephraser,
            classwise,
        } => {
            let model = EmtModel::load(&model)?;
            let data = load_corpus(&data)?;
            let rephraser = by_name(&rephraser)?;
            match protocol {
                Protocol::EndToEnd => {
                    let r = end_to_end_eval(&model, &data, rephraser.as_ref())?;
                    println!("{}", serde_json::to_string_pretty(&r)?);
                }
                Protocol::OracleQg => {
                    let r = oracle_qg_eval(&model, &data, rephraser.as_ref())?;
                    println!("{}", serde_json::to_string_pretty(&r)?);
                }
                Protocol::All => {
                    let e = evaluate(&model, &data, rephraser.as_ref())?;
                    print!("{}", e.table());
                    if let Some(path) = classwise {
                        std::fs::write(path, e.classwise_tsv())?;
                    }
                }
            }
        }
        Command::Ablate { config, data, log } => {
            let config = run_config(config.as_deref())?;
            let (train_set, dev) = load_data(&data, &config)?;
            let dev = dev.ok_or("ablation needs a dev corpus")?;
            let mut log = open_log(log.as_deref())?;
            let table = run_ablation(
                &train_set,
                &dev,
                &config.train,
                log.as_mut().map(|w| w as &mut dyn Write),
            )?;
            print!("{}", table.table());
        }
        Command::Predict {
            model,
            example,
            rephraser,
        } => {
            let model = EmtModel::load(&model)?;
            let ex: DialogExample = serde_json::from_str(&std::fs::read_to_string(&example)?)?;
            let p = model.predict_example(&ex)?;
            let question = match p.inquiry() {
                Some(span) => Some(emt::evaluator::question_for(
                    &ex.rule,
                    span,
                    by_name(&rephraser)?.as_ref(),
                )?),
                None => None,
            };
            let out = serde_json::json!({ "prediction": p, "question": question });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Repl {
            model,
            rule,
            question,
            scenario,
            config,
            trace,
        } => {
            let config = run_config(config.as_deref())?;
            let engine = engine(&model, &config)?;
            repl(
                &engine,
                &std::fs::read_to_string(rule)?,
                &scenario,
                &question,
                trace,
            )?;
        }
        Command::Serve {
            model,
            addr,
            config,
        } => {
            let config = run_config(config.as_deref())?;
            let manager = Arc::new(SessionManager::new(engine(&model, &config)?));
            tokio::runtime::Builder::new_current_thread()
                .enable_io()
                .build()?
                .block_on(serve(addr, manager))?;
        }
    }
    Ok(())
}

fn repl(
    engine: &DialogEngine,
    rule: &str,
    scenario: &str,
    question: &str,
    trace: bool,
) -> Result<(), BoxError> {
    let (mut session, mut turn) = engine.start("repl".into(), rule, scenario, question)?;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        match (&turn.status, &turn.question) {
            (SessionStatus::Active, Some(q)) => {
                print!("{q} ");
                io::stdout().flush()?;
                let Some(line) = lines.next() else { break };
                match engine.step_text(&mut session, &line?) {
                    Ok(t) => turn = t,
                    Err(e) => println!("({e}; answer yes or no)"),
                }
            }
            (status, _) => {
                println!("{}", serde_json::to_string(status)?);
                break;
            }
        }
    }
    if trace {
        println!("{}", serde_json::to_string_pretty(&session.trace())?);
    }
    Ok(())
}
