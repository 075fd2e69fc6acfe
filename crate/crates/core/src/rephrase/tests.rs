use proptest::prelude::*;

use super::*;
use crate::corpus::segment_rules;

fn ask(span: &str) -> String {
    let r = TemplateRephraser::default();
    r.rephrase(&RephraseRequest::new(span, span, span).unwrap())
        .unwrap()
}

#[test]
fn templates_by_shape() {
    assert_eq!(ask("work in Scotland"), "Do you work in Scotland?");
    assert_eq!(
        ask("at least 18 years old"),
        "Is it true that at least 18 years old?"
    );
    assert_eq!(ask("you live in Wales"), "Do you live in Wales?");
    assert_eq!(ask("a carer"), "Are you a carer?");
    assert_eq!(ask("over 65."), "Are you over 65?");
    assert_eq!(ask("you are a carer"), "Is it true that you are a carer?");
    assert_eq!(
        ask("your employer pays"),
        "Is it true that your employer pays?"
    );
}

#[test]
fn request_contract() {
    assert!(matches!(
        RephraseRequest::new("  ", "x", "x"),
        Err(RephraseError::EmptySpan)
    ));
    assert!(matches!(
        RephraseRequest::new("pay tax", "you live in Wales", "r"),
        Err(RephraseError::NotInSentence { .. })
    ));
    let r = TemplateRephraser::default();
    let only_punct = RephraseRequest::new("?", "?", "?").unwrap();
    assert!(matches!(
        r.rephrase(&only_punct),
        Err(RephraseError::EmptySpan)
    ));
}

#[test]
fn request_from_span_keeps_surface_case() {
    let doc = segment_rules("You qualify if:\n* you work in Scotland\n* you pay tax").unwrap();
    let span = doc.span(1, 1, 3);
    assert_eq!(span.text, "work in scotland");
    let req = RephraseRequest::from_span(&doc, &span).unwrap();
    assert_eq!(req.span, "work in Scotland");
    assert_eq!(
        TemplateRephraser::default().rephrase(&req).unwrap(),
        "Do you work in Scotland?"
    );
}

#[test]
fn registry() {
    assert_eq!(by_name("template").unwrap().name(), "template");
    let echo = by_name("echo").unwrap();
    let req = RephraseRequest::new("do you pay tax", "do you pay tax", "").unwrap();
    assert_eq!(echo.rephrase(&req).unwrap(), "Do you pay tax?");
    assert!(matches!(
        by_name("unilm"),
        Err(RephraseError::UnknownGenerator(_))
    ));
}

#[test]
fn data_file_is_validated() {
    let bad = DEFAULT_DATA.replace("Do you {span}?", "Do you");
    assert!(matches!(
        TemplateRephraser::from_toml(&bad),
        Err(RephraseError::Data(_))
    ));
    let custom = DEFAULT_DATA.replace("\"work\",", "");
    let r = TemplateRephraser::from_toml(&custom).unwrap();
    assert_eq!(r.shape("work in Scotland"), SpanShape::Other);
}

proptest! {
    #[test]
    fn output_is_a_single_question_containing_the_span(span in "[a-zA-Z][a-zA-Z0-9 ,'-]{0,40}[.?!]?") {
        for r in [by_name("template").unwrap(), by_name("echo").unwrap()] {
            let req = RephraseRequest::new(&span, &span, &span).unwrap();
            let q = r.rephrase(&req).unwrap();
            prop_assert!(q.chars().next().unwrap().is_ascii_uppercase(), "{}", q);
            prop_assert!(q.ends_with('?') && q.matches('?').count() == 1, "{}", q);
            prop_assert_eq!(q.clone(), r.rephrase(&req).unwrap());
            let core = clean(&span);
            let lower = q.to_lowercase();
            prop_assert!(lower.contains(&core.to_lowercase()), "{} / {}", q, core);
        }
    }
}
