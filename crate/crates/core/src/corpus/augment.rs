use super::tokenize::tokenize;
use super::types::{Answer, DialogExample, QaTurn};

const AUXILIARIES: &[&str] = &[
    "do", "does", "did", "is", "was", "are", "were", "have", "has", "had", "can", "will", "could",
];

/// Turns an answered yes/no question into a first-person statement, e.g.
/// `("Do you work in Scotland?", No)` → `"i do not work in scotland."`.
pub fn render_statement(turn: &QaTurn) -> String {
    let toks: Vec<String> = tokenize(&turn.question)
        .into_iter()
        .filter(|t| t != "?")
        .collect();
    let negative = turn.answer == Answer::No;
    let Some((aux, rest)) = toks
        .split_first()
        .filter(|(first, rest)| AUXILIARIES.contains(&first.as_str()) && !rest.is_empty())
    else {
        let body = toks.join(" ");
        return if negative {
            format!("it is not the case that {body}.")
        } else {
            format!("{body}.")
        };
    };
    let rest: Vec<&str> = rest
        .iter()
        .map(|t| match t.as_str() {
            "you" => "i",
            "your" => "my",
            "yours" => "mine",
            "yourself" => "myself",
            other => other,
        })
        .collect();
    let (subject, predicate) = (rest[0], rest[1..].join(" "));
    let first_person = subject == "i";
    let aux = match (aux.as_str(), first_person) {
        ("are", true) => "am",
        ("were", true) => "was",
        ("has", true) => "have",
        ("does", true) => "do",
        ("do", false) => "does",
        (a, _) => a,
    };
    let do_support = matches!(aux, "do" | "does");
    let mut words = vec![subject.to_string()];
    if negative {
        words.push(aux.to_string());
        words.push("not".into());
    } else if !do_support {
        words.push(aux.to_string());
    }
    if !predicate.is_empty() {
        words.push(predicate);
    }
    format!("{}.", words.join(" "))
}

/// Evidence turns rendered as one scenario paragraph.
pub fn render_evidence(evidence: &[QaTurn]) -> String {
    evidence
        .iter()
        .map(render_statement)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One extra example whose scenario is the rendered evidence; everything
/// else is copied. Examples without evidence yield nothing.
pub fn augment(example: &DialogExample) -> Vec<DialogExample> {
    if example.evidence.is_empty() {
        return Vec::new();
    }
    let mut extra = example.clone();
    extra.id = format!("{}#evidence", example.id);
    extra.scenario = render_evidence(&example.evidence);
    vec![extra]
}

/// The input corpus followed by every augmented example.
pub fn augment_corpus(examples: &[DialogExample]) -> Vec<DialogExample> {
    let mut out = examples.to_vec();
    out.extend(examples.iter().flat_map(augment));
    out
}
