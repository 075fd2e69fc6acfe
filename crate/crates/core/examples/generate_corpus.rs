//! Generates a synthetic split, prints a few labeled dialog states and
//! optionally writes both halves as normalized corpus files.
//!
//! ```text
//! cargo run --example generate_corpus -- [out_dir]
//! ```

use emt::corpus::{generate_split, CorpusFile, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_split(&SyntheticConfig::standard().with_examples(1000), 7);
    for ex in corpus.train.iter().take(4) {
        let l = &ex.labeled;
        let e = &l.example;
        println!(
            "[{}] {} rule, topic asked {:?}",
            e.id,
            ex.meta.logic.word(),
            ex.meta.topic
        );
        for (s, label) in e.rule.sentences.iter().zip(&l.entailment) {
            println!("  {} {}", label.short(), s.text);
        }
        println!("  question: {}", e.question);
        println!("  scenario: {}", e.scenario);
        for t in &e.history {
            println!("  asked:    {} {}", t.question, t.answer);
        }
        match (&e.follow_up, &l.span) {
            (Some(q), Some(span)) => println!(
                "  -> Inquire {q:?} (span {:?} in sentence {})",
                span.text, span.sentence
            ),
            _ => println!("  -> {}", e.decision),
        }
    }
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        CorpusFile::new("synthetic-train", corpus.train_labeled())
            .save(format!("{dir}/train.json"))?;
        CorpusFile::new("synthetic-dev", corpus.dev_labeled()).save(format!("{dir}/dev.json"))?;
        println!("wrote {dir}/train.json and {dir}/dev.json");
    }
    Ok(())
}
