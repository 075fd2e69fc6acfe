use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus::{segment_rules, Answer, QaTurn};
use crate::numeric::{ParamStore, Tape};
use crate::testutil::max_param_grad_error;

fn setup(config: EncoderConfig) -> (Vocabulary, ParamStore, Encoder) {
    let vocab = Vocabulary::build(
        ["you can get it if you live in wales and pay tax do are a carer ?"],
        1,
    );
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let enc = Encoder::new(&mut store, vocab.len(), config, &mut rng).unwrap();
    (vocab, store, enc)
}

fn small() -> EncoderConfig {
    EncoderConfig {
        dim: 8,
        ffn_dim: 12,
        ..Default::default()
    }
}

#[test]
fn output_shapes() {
    let (vocab, store, enc) = setup(small());
    let rule = segment_rules("Intro:\n* you live in wales\n* you pay tax").unwrap();
    let h = [QaTurn::new("Do you pay tax?", Answer::No)];
    let input = build_sequence(
        &rule,
        "Can I get it?",
        "",
        &h,
        &vocab,
        &SequenceConfig::default(),
    );
    let mut tape = Tape::new();
    let out = enc.encode(&mut tape, &store, &input, None).unwrap();
    assert_eq!(tape.value(out.sentences).shape(), [3, 8]);
    assert_eq!(tape.value(out.reads).shape(), [3, 8]);
    assert_eq!(tape.value(out.tokens).shape(), [rule.num_tokens(), 8]);
    assert!(tape.value(out.tokens).is_finite());
}

#[test]
fn history_order_matters() {
    let (vocab, store, enc) = setup(small());
    let rule = segment_rules("* you live in wales\n* you pay tax").unwrap();
    let a = QaTurn::new("Do you pay tax?", Answer::No);
    let b = QaTurn::new("Do you live in wales?", Answer::Yes);
    let run = |h: &[QaTurn]| {
        let input = build_sequence(&rule, "q?", "", h, &vocab, &SequenceConfig::default());
        let mut tape = Tape::new();
        let out = enc.encode(&mut tape, &store, &input, None).unwrap();
        tape.value(out.sentences).clone()
    };
    assert_ne!(run(&[a.clone(), b.clone()]), run(&[b, a]));
}

#[test]
fn permuting_rule_sentences_permutes_keys_without_positions() {
    let (vocab, store, enc) = setup(EncoderConfig {
        positional: false,
        ..small()
    });
    let keys = |text: &str| {
        let rule = segment_rules(text).unwrap();
        let input = build_sequence(
            &rule,
            "can i get it?",
            "i pay tax.",
            &[],
            &vocab,
            &SequenceConfig::default(),
        );
        let mut tape = Tape::new();
        let out = enc.encode(&mut tape, &store, &input, None).unwrap();
        tape.value(out.sentences).clone()
    };
    let ab = keys("* you live in wales\n* you are a carer");
    let ba = keys("* you are a carer\n* you live in wales");
    for (x, y) in ab.row(0).iter().zip(ba.row(1)) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in ab.row(1).iter().zip(ba.row(0)) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn probe_gradient_matches_finite_differences() {
    let (vocab, mut store, enc) = setup(EncoderConfig {
        layers: 2,
        ..small()
    });
    // a nonzero segment bias so its gradient is exercised away from zero
    let b = store.id("encoder.layer0.h0.segment_bias").unwrap();
    store.get_mut(b).value.data_mut()[0] = 0.3;
    let rule = segment_rules("Intro:\n* you live in wales").unwrap();
    let h = [QaTurn::new("Do you live in wales?", Answer::Yes)];
    let input = build_sequence(
        &rule,
        "Can I get it?",
        "I pay tax.",
        &h,
        &vocab,
        &SequenceConfig::default(),
    );
    let err = max_param_grad_error(
        &store,
        &|tape, store| {
            let out = enc.encode(tape, store, &input, None)?;
            let s = tape.sigmoid(out.sentences);
            let r = tape.sigmoid(out.reads);
            let t = tape.sigmoid(out.tokens);
            let (s, r, t) = (tape.sum(s), tape.sum(r), tape.sum(t));
            let st = tape.add(s, t)?;
            let r = tape.scale(r, 0.5);
            tape.add(st, r)
        },
        10,
        1,
    );
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn deterministic() {
    let (vocab, store, enc) = setup(small());
    let rule = segment_rules("* you live in wales").unwrap();
    let input = build_sequence(&rule, "q?", "s", &[], &vocab, &SequenceConfig::default());
    let run = || {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = enc
            .encode(&mut tape, &store, &input, Some(&mut rng))
            .unwrap();
        tape.value(out.tokens).clone()
    };
    assert_eq!(run(), run());
}
