//! Coarse-to-fine span choice on fixed scores: sentence weights scale the
//! token scores, and the best start/end pair never crosses a sentence.
//!
//! ```text
//! cargo run --example span_extraction
//! ```

use emt::corpus::RuleDocument;
use emt::span::extract;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = RuleDocument::parse(
        "You qualify if either applies:\n* you live in wales\n* you are a carer",
    )?;
    let lengths: Vec<usize> = doc.sentences.iter().map(|s| s.len()).collect();
    // raw start/end scores: the lead-in looks best on its own
    let (mut start, mut end) = (Vec::new(), Vec::new());
    for (i, &len) in lengths.iter().enumerate() {
        let peak = [3.0, 1.5, 1.2][i];
        start.extend((0..len).map(|t| if t == 0 { peak } else { 0.1 }));
        end.extend((0..len).map(|t| if t + 1 == len { peak - 0.2 } else { 0.1 }));
    }

    for (label, zeta) in [
        ("unweighted", vec![1.0, 1.0, 1.0]),
        ("weighted", vec![0.05, 0.9, 0.05]),
    ] {
        let mut owner = Vec::new();
        for (i, &len) in lengths.iter().enumerate() {
            owner.extend(std::iter::repeat(i).take(len));
        }
        let gamma: Vec<f64> = start
            .iter()
            .zip(&owner)
            .map(|(s, &i)| s * zeta[i])
            .collect();
        let delta: Vec<f64> = end.iter().zip(&owner).map(|(e, &i)| e * zeta[i]).collect();
        let choice = extract(&gamma, &delta, &lengths);
        let span = choice.to_span(&doc);
        println!(
            "{label:<10} ζ={zeta:?} -> sentence {} tokens {}..={} {:?} (score {:.3})",
            span.sentence, span.start, span.end, span.text, choice.score
        );
    }
    Ok(())
}
