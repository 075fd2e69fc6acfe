use super::*;
use crate::corpus::{generate_synthetic, SyntheticConfig};
use crate::encoder::EncoderConfig;

fn data(n: usize, seed: u64) -> Vec<LabeledExample> {
    generate_synthetic(&SyntheticConfig::standard().with_examples(n), seed)
        .into_iter()
        .map(|e| e.labeled)
        .collect()
}

fn tiny() -> TrainConfig {
    TrainConfig {
        model: ModelConfig {
            encoder: EncoderConfig {
                dim: 16,
                ffn_dim: 16,
                ..Default::default()
            },
            ..Default::default()
        },
        epochs: 2,
        batch_size: 8,
        dropout: 0.0,
        eval_every_epoch: false,
        ..TrainConfig::desk()
    }
}

#[test]
fn memorizes_eight_examples() {
    let mut train_set = data(60, 2);
    // two of every class
    let mut picked = Vec::new();
    for d in Decision::ALL {
        picked.extend(
            train_set
                .iter()
                .filter(|e| e.example.decision == d)
                .take(2)
                .cloned(),
        );
    }
    train_set = picked;
    assert_eq!(train_set.len(), 8);
    let config = TrainConfig {
        epochs: 500,
        batch_size: 8,
        learning_rate: 1e-2,
        warmup_fraction: 0.0,
        ablation: Ablation {
            data_aug: false,
            ..Ablation::FULL
        },
        ..tiny()
    };
    let run = train_seed(&train_set, None, &config, 1, None).unwrap();
    assert!(run.steps.len() <= 500);
    let best = run
        .steps
        .iter()
        .map(|s| s.decision)
        .fold(f64::INFINITY, f64::min);
    assert!(best < 0.01, "decision loss {best}");
}

#[test]
fn zero_weights_leave_only_the_decision_loss() {
    let config = TrainConfig {
        lambda_entail: 0.0,
        lambda_span: 0.0,
        ..tiny()
    };
    let run = train_seed(&data(40, 3), None, &config, 1, None).unwrap();
    assert!(!run.steps.is_empty());
    for s in &run.steps {
        assert_eq!(s.loss, s.decision, "step {}", s.step);
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let config = TrainConfig {
        dropout: 0.2,
        ..tiny()
    };
    let d = data(40, 4);
    let a = train_seed(&d, None, &config, 9, None).unwrap();
    let b = train_seed(&d, None, &config, 9, None).unwrap();
    let bits = |r: &TrainRun| r.steps.iter().map(|s| s.loss.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let c = train_seed(&d, None, &config, 10, None).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn every_parameter_group_gets_gradient() {
    let d = data(40, 5);
    let ex = d
        .iter()
        .find(|e| e.example.decision == Decision::Inquire)
        .unwrap();
    for sentence_head in [false, true] {
        let config = TrainConfig {
            sentence_head,
            ..tiny()
        };
        let model =
            EmtModel::new(config.effective_model(), Vocabulary::from_corpus(&d, 1), 1).unwrap();
        let mut tape = Tape::new();
        let fwd = model
            .forward(&mut tape, &model.encode_example(&ex.example), None)
            .unwrap();
        let p = model.losses(&mut tape, &fwd, ex).unwrap();
        let l = total_loss(&mut tape, p.decision, p.entail, p.span, 10.0, 0.6).unwrap();
        let l = tape.add(l, p.sentence).unwrap();
        let g = tape.backward(l).unwrap();
        let mut grads = ParamGrads::zeros(model.store());
        grads.accumulate(&tape, &g);
        for (id, param) in model.store().iter() {
            let norm: f64 = grads.get(id).iter().map(|x| x * x).sum();
            assert!(norm > 0.0, "no gradient reaches {}", param.name);
        }
    }
}

#[test]
fn config_checks() {
    let bad = |c: TrainConfig| matches!(c.validate(), Err(TrainError::Config(_)));
    assert!(bad(TrainConfig {
        lambda_entail: -1.0,
        ..tiny()
    }));
    assert!(bad(TrainConfig {
        seeds: vec![],
        ..tiny()
    }));
    assert!(bad(TrainConfig {
        batch_size: 0,
        ..tiny()
    }));
    assert!(bad(TrainConfig {
        dropout: 1.0,
        ..tiny()
    }));
    tiny().validate().unwrap();
    TrainConfig::paper().validate().unwrap();

    let no_inquire: Vec<LabeledExample> = data(40, 6)
        .into_iter()
        .filter(|e| e.example.decision != Decision::Inquire)
        .collect();
    assert!(matches!(
        train_seed(&no_inquire, None, &tiny(), 1, None),
        Err(TrainError::NoInquire)
    ));
    let ok = TrainConfig {
        lambda_span: 0.0,
        epochs: 1,
        ..tiny()
    };
    train_seed(&no_inquire, None, &ok, 1, None).unwrap();
}

#[test]
fn ablation_flags_map_onto_the_model() {
    let v = Ablation::variants();
    assert_eq!(v[0].1, Ablation::FULL);
    let cfg = |a: Ablation| TrainConfig {
        ablation: a,
        ..tiny()
    };
    assert!(!cfg(v[1].1).ablation.data_aug);
    assert!(!cfg(v[2].1).effective_model().span.coarse_to_fine);
    assert!(cfg(v[2].1).effective_lambda_entail() > 0.0);
    assert_eq!(cfg(v[3].1).effective_lambda_entail(), 0.0);
    assert!(!cfg(v[3].1).effective_model().span.coarse_to_fine);
    assert!(!cfg(v[4].1).effective_model().tracker.enabled);
    assert!(cfg(v[0].1).effective_model().span.coarse_to_fine);
    // augmentation adds one copy per example with evidence
    let d = data(30, 7);
    let with_evidence = d.iter().filter(|e| !e.example.evidence.is_empty()).count();
    assert_eq!(training_set(&d, true).len(), d.len() + with_evidence);
    assert_eq!(training_set(&d, false).len(), d.len());
}

#[test]
fn metrics_log_and_summary() {
    let d = data(40, 8);
    let dev = data(20, 9);
    let config = TrainConfig {
        seeds: vec![1, 2],
        ..tiny()
    };
    let mut buf = Vec::new();
    let result = train(&d, Some(&dev), &config, Some(&mut buf)).unwrap();
    assert_eq!(result.runs.len(), 2);
    let micro = result.metric("micro").unwrap();
    assert_eq!(micro.n, 2);
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let steps = lines.iter().filter(|l| l["kind"] == "step").count();
    let epochs = lines.iter().filter(|l| l["kind"] == "epoch").count();
    assert_eq!(
        steps,
        result.runs.iter().map(|r| r.steps.len()).sum::<usize>()
    );
    assert_eq!(epochs, 4);
    assert!(lines
        .iter()
        .any(|l| l["kind"] == "epoch" && l["dev"].is_object()));
}

#[test]
fn ablation_table_shape() {
    let d = data(30, 10);
    let dev = data(12, 11);
    let config = TrainConfig {
        epochs: 1,
        ..tiny()
    };
    let t = run_ablation(&d, &dev, &config, None).unwrap();
    assert_eq!(t.rows.len(), 5);
    assert!(t.rows.iter().all(|r| r.metrics.len() == 6));
    assert_eq!(t.table().lines().count(), 6);
    assert!(t.mean("EMT", "micro").is_some());
}

#[test]
fn window_fraction() {
    let falling: Vec<f64> = (0..200).map(|i| 10.0 - i as f64 * 0.01).collect();
    assert_eq!(nonincreasing_window_fraction(&falling, 50), Some(1.0));
    let mut bumpy = falling.clone();
    bumpy[150..].iter_mut().for_each(|x| *x += 5.0);
    assert_eq!(nonincreasing_window_fraction(&bumpy, 50), Some(2.0 / 3.0));
    assert_eq!(nonincreasing_window_fraction(&falling[..60], 50), None);
    assert_eq!(
        MeanStd::of(&[1.0, 3.0]).unwrap(),
        MeanStd {
            mean: 2.0,
            std: 2f64.sqrt(),
            n: 2
        }
    );
}
