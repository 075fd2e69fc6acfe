//! Turns rule spans into follow-up questions with each registered generator.
//!
//! ```text
//! cargo run --example rephrase
//! ```

use emt::corpus::RuleDocument;
use emt::rephrase::{by_name, RephraseRequest, GENERATORS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = RuleDocument::parse(
        "You can get the allowance if all of the following apply:\n* you live in wales\n* you are over 18\n* your partner works\n* you care for your mother",
    )?;
    for name in GENERATORS {
        let generator = by_name(name)?;
        println!("{name}:");
        for sentence in doc.sentences.iter().skip(1) {
            let req = RephraseRequest::new(&sentence.text, &sentence.text, &doc.raw)?;
            println!("  {:<26} -> {}", sentence.text, generator.rephrase(&req)?);
        }
    }
    // a span shorter than its sentence
    let req = RephraseRequest::new("live in wales", "you live in wales", &doc.raw)?;
    println!("partial span -> {}", by_name("template")?.rephrase(&req)?);
    Ok(())
}
