//! Behaviour of a model trained on the synthetic corpus: the loss curve and
//! dialogs against a simulated user who answers from the hidden truth.

use std::sync::{Arc, OnceLock};

use emt::corpus::{
    generate_split, synthetic::decide_from_states, Answer, Decision, EntailmentLabel,
    SyntheticConfig, SyntheticExample,
};
use emt::rephrase::TemplateRephraser;
use emt::service::{DialogEngine, SessionStatus, DEFAULT_MAX_TURNS};
use emt::trainer::{nonincreasing_window_fraction, train_seed, TrainConfig, TrainRun};

struct Fixture {
    run: TrainRun,
    dev: Vec<SyntheticExample>,
}

fn fixture() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        // the standard corpus and the documented desk defaults
        let corpus = generate_split(&SyntheticConfig::standard(), 21);
        let mut config = TrainConfig::desk();
        config.eval_every_epoch = false;
        let run = train_seed(&corpus.train_labeled(), None, &config, 3, None).unwrap();
        Fixture {
            run,
            dev: corpus.dev,
        }
    })
}

#[test]
fn loss_falls_over_most_windows() {
    let losses: Vec<f64> = fixture().run.steps.iter().map(|s| s.loss).collect();
    let fraction = nonincreasing_window_fraction(&losses, 50).unwrap();
    println!(
        "{} steps, non-increasing windows {:.1}%",
        losses.len(),
        100.0 * fraction
    );
    assert!(
        fraction >= 0.9,
        "only {:.1}% of 50-step windows are non-increasing",
        100.0 * fraction
    );
}

fn argmax(p: &[f64; 3]) -> EntailmentLabel {
    let i = (0..3).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    EntailmentLabel::ALL[i]
}

#[test]
fn simulated_user_dialogs_reach_the_rule_outcome() {
    let f = fixture();
    let engine = DialogEngine::new(
        Arc::new(f.run.model.clone()),
        Box::new(TemplateRephraser::default()),
        DEFAULT_MAX_TURNS,
    );
    let (mut correct, mut dialogs) = (0, 0);
    let (mut flipped, mut yes_answers) = (0, 0);
    for ex in f.dev.iter().take(150) {
        let gold = &ex.labeled.example;
        let truth: Vec<EntailmentLabel> = ex
            .meta
            .truth
            .iter()
            .map(|&t| {
                if t {
                    EntailmentLabel::Entailment
                } else {
                    EntailmentLabel::Contradiction
                }
            })
            .collect();
        let want = if ex.meta.irrelevant {
            Decision::Irrelevant
        } else {
            decide_from_states(ex.meta.logic, &truth)
        };
        let (mut session, mut turn) = engine
            .start(
                gold.id.clone(),
                &gold.rule.raw,
                &gold.scenario,
                &gold.question,
            )
            .unwrap();
        while turn.status == SessionStatus::Active {
            let last = session.turns.last().unwrap();
            let asked = last.span.as_ref().unwrap().sentence;
            // sentence 0 is the lead-in; bullets follow in condition order
            let holds = asked > 0 && ex.meta.truth[asked - 1];
            let before = argmax(&last.entailment[asked]);
            turn = engine
                .step(&mut session, if holds { Answer::Yes } else { Answer::No })
                .unwrap();
            if holds && before == EntailmentLabel::Unknown {
                yes_answers += 1;
                let after = &session.turns.last().unwrap().entailment[asked];
                flipped += usize::from(argmax(after) == EntailmentLabel::Entailment);
            }
        }
        dialogs += 1;
        correct += usize::from(turn.status == (SessionStatus::Concluded { decision: want }));
    }
    println!("outcome correct {correct}/{dialogs}; asked sentence Unknown -> Entailment after Yes {flipped}/{yes_answers}");
    assert!(correct as f64 >= 0.9 * dialogs as f64);
    assert!(yes_answers > 0 && flipped as f64 >= 0.9 * yes_answers as f64);
}
