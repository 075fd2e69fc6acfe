//! Trains a small model, saves and reloads it, and prints everything one
//! prediction exposes: decision probabilities, per-sentence entailment,
//! read gates and the span it would ask about.
//!
//! ```text
//! cargo run --release --example predict
//! ```

use emt::corpus::{generate_split, Answer, QaTurn, RuleDocument, SyntheticConfig};
use emt::evaluator::question_for;
use emt::model::EmtModel;
use emt::rephrase::TemplateRephraser;
use emt::trainer::{train_seed, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let corpus = generate_split(&SyntheticConfig::standard().with_examples(5000), 5);
    let mut config = TrainConfig::desk();
    config.epochs = 8;
    let trained = train_seed(&corpus.train_labeled(), None, &config, 2, None)?.model;
    let dir = std::env::temp_dir().join("emt-predict-example");
    trained.save(&dir)?;
    let model = EmtModel::load(&dir)?;

    let rule = RuleDocument::parse(
        "You can get the refund if any of the following apply:\n* you own a van\n* you study music",
    )?;
    let history = [QaTurn::new("Do you own a van?", Answer::No)];
    let p = model.predict(&rule, "Can I get the refund?", "I live in spain.", &history)?;

    println!("decision {} {:.3?}", p.decision, p.decision_probabilities);
    for (i, s) in rule.sentences.iter().enumerate() {
        let probs = p.entailment.probabilities[i];
        println!(
            "  {} E/C/U {:.3?} attention {:.3}  {}",
            p.entailment.labels[i].short(),
            probs,
            p.attention[i],
            s.text
        );
    }
    for (name, g) in ["question", "scenario", "turn 1"].iter().zip(&p.gates) {
        println!("  gates after {name:<8} {g:.3?}");
    }
    if let Some(span) = p.inquiry() {
        println!(
            "asks {:?} -> {}",
            span.text,
            question_for(&rule, span, &TemplateRephraser::default())?
        );
    }
    Ok(())
}
