//! Scores hand-written predictions under the end-to-end protocol and shows
//! how BLEU is restricted to turns where both sides inquire.
//!
//! ```text
//! cargo run --example bleu_protocols
//! ```

use emt::corpus::{generate_split, SyntheticConfig};
use emt::evaluator::{bleu_text, end_to_end_from_predictions, TurnPrediction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cands = ["do you live in wales ?", "are you a carer ?"];
    let refs = ["do you live in wales ?", "are you a student ?"];
    let (cands, refs): (Vec<String>, Vec<String>) = (
        cands.map(String::from).into(),
        refs.map(String::from).into(),
    );
    for n in 1..=4 {
        println!("BLEU-{n}: {:.4}", bleu_text(&cands, &refs, n)?);
    }

    let dev = generate_split(&SyntheticConfig::standard().with_examples(200), 3).dev;
    let golds: Vec<_> = dev.iter().map(|e| e.labeled.example.clone()).collect();
    // gold decisions everywhere, but every third Inquire is answered Yes
    let mut inquiries = 0;
    let preds: Vec<TurnPrediction> = golds
        .iter()
        .map(|g| match &g.follow_up {
            Some(q) => {
                inquiries += 1;
                if inquiries % 3 == 0 {
                    TurnPrediction {
                        decision: emt::corpus::Decision::Yes,
                        question: None,
                    }
                } else {
                    TurnPrediction {
                        decision: g.decision,
                        question: Some(q.clone()),
                    }
                }
            }
            None => TurnPrediction {
                decision: g.decision,
                question: None,
            },
        })
        .collect();
    let report = end_to_end_from_predictions(&golds, &preds)?;
    println!(
        "micro {:.3} macro {:.3}",
        report.micro_accuracy, report.macro_accuracy
    );
    println!(
        "BLEU over {} of {inquiries} gold inquiries: {:?}",
        report.mutual_inquire, report.bleu
    );
    for c in &report.classwise {
        println!("  {:<10} {}/{}", c.label, c.correct, c.total);
    }
    Ok(())
}
