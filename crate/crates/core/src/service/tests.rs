use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use super::*;
use crate::corpus::{Answer, Decision};
use crate::encoder::{EncoderConfig, Vocabulary};
use crate::model::{EmtModel, ModelConfig};
use crate::numeric::Tensor;
use crate::rephrase::TemplateRephraser;

const RULE: &str = "You can get the grant if all of the following apply:\n* you live in Wales\n* you are a carer\n* you pay café tax";

/// A model whose decision is pinned to `decision` by its output bias.
fn pinned(decision: Decision) -> Arc<EmtModel> {
    let vocab = Vocabulary::build(
        [RULE, "can i get the grant ? do you live in wales yes no"],
        1,
    );
    let config = ModelConfig {
        encoder: EncoderConfig {
            dim: 8,
            ffn_dim: 8,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut model = EmtModel::new(config, vocab, 5).unwrap();
    let store = model.store_mut();
    let wz = store.id("decision.w_z").unwrap();
    store.set(wz, Tensor::zeros(&[4, 16])).unwrap();
    let mut bias = vec![0.0; 4];
    bias[decision.index()] = 50.0;
    store
        .set(store.id("decision.b_z").unwrap(), Tensor::vector(bias))
        .unwrap();
    Arc::new(model)
}

fn engine(decision: Decision) -> DialogEngine {
    DialogEngine::new(
        pinned(decision),
        Box::new(TemplateRephraser::default()),
        DEFAULT_MAX_TURNS,
    )
}

#[test]
fn validation() {
    let e = engine(Decision::Yes);
    let err = e.start("a".into(), "  ", "", "Can I?").unwrap_err();
    assert_eq!(err.code(), "validation_error");
    let err = e.start("a".into(), RULE, "", " ").unwrap_err();
    assert_eq!(err.code(), "validation_error");
}

#[test]
fn concluded_sessions_reject_answers() {
    let e = engine(Decision::Yes);
    let (mut s, r) = e
        .start("a".into(), RULE, "", "Can I get the grant?")
        .unwrap();
    assert_eq!(
        r.status,
        SessionStatus::Concluded {
            decision: Decision::Yes
        }
    );
    assert_eq!((r.turn, r.question.as_ref()), (1, None));
    let err = e.step(&mut s, Answer::Yes).unwrap_err();
    assert_eq!(err.code(), "session_closed");
    assert_eq!(s.turns.len(), 1);
}

#[test]
fn inquiring_forever_aborts_at_the_cap() {
    let e = engine(Decision::Inquire);
    let (mut s, mut r) = e
        .start("a".into(), RULE, "", "Can I get the grant?")
        .unwrap();
    let mut answers = 0;
    while r.status == SessionStatus::Active {
        let q = r.question.clone().unwrap();
        assert!(q.ends_with('?'));
        assert_eq!(s.pending_question(), Some(q.as_str()));
        r = e
            .step(
                &mut s,
                if answers % 2 == 0 {
                    Answer::Yes
                } else {
                    Answer::No
                },
            )
            .unwrap();
        answers += 1;
    }
    assert!(matches!(r.status, SessionStatus::Aborted { .. }));
    assert_eq!(r.turn, DEFAULT_MAX_TURNS);
    assert_eq!(s.history.len(), DEFAULT_MAX_TURNS - 1);
    assert_eq!(
        e.step(&mut s, Answer::Yes).unwrap_err().code(),
        "session_closed"
    );

    let t = s.trace();
    assert_eq!(t.turns.len(), DEFAULT_MAX_TURNS);
    for (k, turn) in t.turns.iter().enumerate() {
        assert_eq!(turn.entailment.len(), 4);
        for row in &turn.entailment {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // question, scenario, then one read per earlier answer
        assert_eq!(turn.gates.len(), 2 + k);
        assert_eq!(turn.answer.is_some(), k + 1 < DEFAULT_MAX_TURNS);
    }
}

#[test]
fn span_offsets_index_the_rule_text() {
    let e = engine(Decision::Inquire);
    let (s, _) = e
        .start("a".into(), RULE, "", "Can I get the grant?")
        .unwrap();
    let t = s.trace();
    let span = t.turns[0].span.as_ref().unwrap();
    assert_eq!(&t.rule_text[span.byte_start..span.byte_end], span.text);
    let by_chars: String = t
        .rule_text
        .chars()
        .skip(span.char_start)
        .take(span.char_end - span.char_start)
        .collect();
    assert_eq!(by_chars, span.text);
    for sent in &t.sentences {
        let by_chars: String = t
            .rule_text
            .chars()
            .skip(sent.char_start)
            .take(sent.char_end - sent.char_start)
            .collect();
        assert_eq!(by_chars, t.rule_text[sent.byte_start..sent.byte_end]);
    }
    // the last sentence has a two-byte character before its end
    let last = t.sentences.last().unwrap();
    assert_eq!(last.byte_end - last.char_end, 1);
}

#[test]
fn free_text_answers() {
    let e = engine(Decision::Inquire);
    let (mut s, _) = e
        .start("a".into(), RULE, "", "Can I get the grant?")
        .unwrap();
    let err = e.step_text(&mut s, "maybe later").unwrap_err();
    assert_eq!(err.code(), "unparseable_answer");
    assert!(s.history.is_empty());
    e.step_text(&mut s, "Nope, I don't").unwrap();
    assert_eq!(s.history[0].answer, Answer::No);
}

#[test]
fn replay_is_deterministic() {
    let model = pinned(Decision::Inquire);
    let run = || {
        let e = DialogEngine::new(model.clone(), Box::new(TemplateRephraser::default()), 4);
        let (mut s, _) = e
            .start("x".into(), RULE, "I live in Wales.", "Can I get the grant?")
            .unwrap();
        e.step(&mut s, Answer::Yes).unwrap();
        e.step(&mut s, Answer::No).unwrap();
        s.trace()
    };
    assert_eq!(run(), run());
}

#[test]
fn manager_is_safe_across_threads() {
    let m = Arc::new(SessionManager::new(engine(Decision::Inquire)));
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let m = m.clone();
            std::thread::spawn(move || {
                let r = m.start(RULE, "", "Can I get the grant?").unwrap();
                for _ in 0..3 {
                    m.answer(&r.session_id, Answer::Yes).unwrap();
                }
                r.session_id
            })
        })
        .collect();
    let mut ids: Vec<String> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 4);
    assert!(m.dump().iter().all(|t| t.turns.len() == 4));
    assert_eq!(
        m.answer("nope", Answer::Yes).unwrap_err().code(),
        "session_not_found"
    );
}

async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    body: Option<&str>,
) -> (StatusCode, serde_json::Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn http_session_round_trip() {
    let app = router(Arc::new(SessionManager::new(engine(Decision::Inquire))));
    let body =
        serde_json::json!({"rule_text": RULE, "scenario": "", "question": "Can I get the grant?"})
            .to_string();
    let (status, created) = call(&app, "POST", "/v1/sessions", Some(&body)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["schema_version"], SCHEMA_VERSION);
    let id = created["session_id"].as_str().unwrap().to_string();
    assert!(created["turn"]["question"].as_str().unwrap().ends_with('?'));

    let (status, turn) = call(
        &app,
        "POST",
        &format!("/v1/sessions/{id}/answers"),
        Some(r#"{"answer": "yes"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(turn["turn"], 2);
    assert_eq!(turn["status"]["state"], "active");

    let (status, trace) = call(&app, "GET", &format!("/v1/sessions/{id}/trace"), None).await;
    assert_eq!(status, StatusCode::OK);
    let parsed: SessionTrace = serde_json::from_value(trace).unwrap();
    assert_eq!(parsed.turns.len(), 2);
    assert_eq!(parsed.turns[0].answer, Some(Answer::Yes));

    let (_, health) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(health["sessions"], 1);
}

#[tokio::test]
async fn http_errors_carry_codes() {
    let app = router(Arc::new(SessionManager::new(engine(Decision::No))));
    let (status, e) = call(&app, "GET", "/v1/sessions/missing/trace", None).await;
    assert_eq!(
        (status, e["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("session_not_found"))
    );
    let (status, e) = call(&app, "POST", "/v1/sessions", Some("{not json")).await;
    assert_eq!(
        (status, e["error"]["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("bad_request"))
    );
    let empty = r#"{"rule_text": "", "question": "Can I?"}"#;
    let (status, e) = call(&app, "POST", "/v1/sessions", Some(empty)).await;
    assert_eq!(
        (status, e["error"]["code"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("validation_error"))
    );

    let body =
        serde_json::json!({"rule_text": RULE, "question": "Can I get the grant?"}).to_string();
    let (_, created) = call(&app, "POST", "/v1/sessions", Some(&body)).await;
    assert_eq!(created["turn"]["status"]["decision"], "No");
    let id = created["session_id"].as_str().unwrap();
    let (status, e) = call(
        &app,
        "POST",
        &format!("/v1/sessions/{id}/answers"),
        Some(r#"{"answer": "yes"}"#),
    )
    .await;
    assert_eq!(
        (status, e["error"]["code"].as_str()),
        (StatusCode::CONFLICT, Some("session_closed"))
    );
}
