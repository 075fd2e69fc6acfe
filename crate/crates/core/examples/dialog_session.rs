//! Trains a small model (or loads one saved by `emt train`), then holds
//! scripted dialogs through the session manager and prints the last trace.
//!
//! ```text
//! cargo run --release --example dialog_session -- [model_dir]
//! ```

use std::sync::Arc;

use emt::corpus::{generate_split, Answer, SyntheticConfig};
use emt::model::EmtModel;
use emt::rephrase::TemplateRephraser;
use emt::service::{DialogEngine, SessionManager, SessionStatus, DEFAULT_MAX_TURNS};
use emt::trainer::{train_seed, TrainConfig};

const RULE: &str = "You can get the grant if all of the following apply:\n* you live in wales\n* you are a carer\n* you pay tax";

fn model() -> Result<EmtModel, Box<dyn std::error::Error>> {
    if let Some(dir) = std::env::args().nth(1) {
        return Ok(EmtModel::load(dir)?);
    }
    let corpus = generate_split(&SyntheticConfig::standard().with_examples(5000), 5);
    let mut config = TrainConfig::desk();
    config.epochs = 8;
    Ok(train_seed(&corpus.train_labeled(), None, &config, 1, None)?.model)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let engine = DialogEngine::new(
        Arc::new(model()?),
        Box::new(TemplateRephraser::default()),
        DEFAULT_MAX_TURNS,
    );
    let manager = SessionManager::new(engine);

    let scripts: [(&str, &str, &[Answer]); 3] = [
        (
            "I pay tax.",
            "Can I get the grant?",
            &[Answer::Yes, Answer::Yes],
        ),
        ("", "Can I get the grant?", &[Answer::Yes, Answer::No]),
        ("", "Can I get the permit?", &[]),
    ];
    let mut last = String::new();
    for (scenario, question, answers) in scripts {
        println!("Q: {question}  scenario: {scenario:?}");
        let mut turn = manager.start(RULE, scenario, question)?;
        let mut answers = answers.iter();
        while turn.status == SessionStatus::Active {
            let asked = turn.question.clone().unwrap_or_default();
            let Some(&a) = answers.next() else {
                println!("  {asked} (script ends)");
                break;
            };
            println!("  {asked} {a}");
            turn = manager.answer(&turn.session_id, a)?;
        }
        println!("  -> {:?}", turn.status);
        last = turn.session_id;
    }
    let trace = manager.trace(&last)?;
    println!("{}", serde_json::to_string_pretty(&trace)?);
    Ok(())
}
