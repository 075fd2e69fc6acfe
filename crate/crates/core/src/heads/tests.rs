use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn random_weights(rng: &mut ChaCha8Rng, d: usize) -> HeadWeights {
    let mut t = |shape: &[usize]| {
        let n = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    };
    HeadWeights {
        w_alpha: t(&[2 * d]),
        b_alpha: 0.3,
        w_z: t(&[4, 2 * d]),
        b_z: t(&[4]),
        w_e: t(&[3, 2 * d]),
        b_e: t(&[3]),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn single_sentence_summary_is_its_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random_weights(&mut rng, 3);
    let k = rows(&mut rng, 1, 3);
    let v = rows(&mut rng, 1, 3);
    let out = summarize_and_decide(&k, &v, &w).unwrap();
    assert_eq!(out.attention, vec![1.0]);
    assert_eq!(out.summary, [k[0].clone(), v[0].clone()].concat());
}

#[test]
fn identical_sentences_get_uniform_attention() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = random_weights(&mut rng, 3);
    let k = vec![vec![0.1, 0.2, 0.3]; 4];
    let out = summarize_and_decide(&k, &k, &w).unwrap();
    for a in out.attention {
        assert!((a - 0.25).abs() < 1e-12);
    }
}

#[test]
fn summary_matches_recomputation_and_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let d = rng.gen_range(1..6);
        let w = random_weights(&mut rng, d);
        let k = rows(&mut rng, 3, d);
        let v = rows(&mut rng, 3, d);
        let out = summarize_and_decide(&k, &v, &w).unwrap();
        let kv: Vec<Vec<f64>> = (0..3)
            .map(|i| [k[i].clone(), v[i].clone()].concat())
            .collect();
        let alpha: Vec<f64> = kv
            .iter()
            .map(|r| dot(w.w_alpha.data(), r) + w.b_alpha)
            .collect();
        let mx = alpha.iter().cloned().fold(f64::MIN, f64::max);
        let z: f64 = alpha.iter().map(|a| (a - mx).exp()).sum();
        let att: Vec<f64> = alpha.iter().map(|a| (a - mx).exp() / z).collect();
        let total: f64 = out.attention.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for j in 0..2 * d {
            let c: f64 = (0..3).map(|i| att[i] * kv[i][j]).sum();
            assert!((c - out.summary[j]).abs() < 1e-12);
            let lo = kv.iter().map(|r| r[j]).fold(f64::MAX, f64::min);
            let hi = kv.iter().map(|r| r[j]).fold(f64::MIN, f64::max);
            assert!(out.summary[j] >= lo - 1e-12 && out.summary[j] <= hi + 1e-12);
        }
        let logits: Vec<f64> = (0..4)
            .map(|r| dot(&w.w_z.data()[r * 2 * d..(r + 1) * 2 * d], &out.summary) + w.b_z.data()[r])
            .collect();
        let mut best = 0;
        for i in 1..4 {
            if logits[i] > logits[best] {
                best = i;
            }
        }
        assert_eq!(out.decision.index(), best);
    }
}

#[test]
fn decision_tie_and_dominant_logit() {
    let k = vec![vec![0.5, -0.5]];
    let zero = HeadWeights::zeros(2);
    assert_eq!(
        summarize_and_decide(&k, &k, &zero).unwrap().decision,
        Decision::Yes
    );
    let mut w = HeadWeights::zeros(2);
    w.b_z = Tensor::vector(vec![0.0, 0.0, 0.0, 10.0]);
    assert_eq!(
        summarize_and_decide(&k, &k, &w).unwrap().decision,
        Decision::Inquire
    );
}

#[test]
fn attention_shift_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_weights(&mut rng, 4);
    let k = rows(&mut rng, 3, 4);
    let v = rows(&mut rng, 3, 4);
    let a = summarize_and_decide(&k, &v, &w).unwrap();
    let mut shifted = w.clone();
    shifted.b_alpha += 17.0;
    let b = summarize_and_decide(&k, &v, &shifted).unwrap();
    for (x, y) in a
        .attention
        .iter()
        .zip(&b.attention)
        .chain(a.summary.iter().zip(&b.summary))
    {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn entailment_shapes_and_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for m in 1..=5 {
        let k = rows(&mut rng, m, 2);
        let zero = entail_scores(&k, &k, &HeadWeights::zeros(2)).unwrap();
        assert_eq!(zero.probabilities.len(), m);
        for p in &zero.probabilities {
            for x in p {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }
    let w = random_weights(&mut rng, 3);
    let k = rows(&mut rng, 4, 3);
    let v = rows(&mut rng, 4, 3);
    let out = entail_scores(&k, &v, &w).unwrap();
    for i in 0..4 {
        let kv = [k[i].clone(), v[i].clone()].concat();
        for s in 0..3 {
            let e = dot(&w.w_e.data()[s * 6..(s + 1) * 6], &kv) + w.b_e.data()[s];
            assert!((e - out.logits[i][s]).abs() < 1e-12);
        }
        assert!((out.probabilities[i].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn losses() {
    use EntailmentLabel::*;
    let mut tape = Tape::new();
    let e = tape.constant(Tensor::zeros(&[2, 3]));
    let l = entail_loss(&mut tape, e, &[Entailment, Unknown]).unwrap();
    assert!((tape.value(l).item() - 3f64.ln()).abs() < 1e-12);

    let z = tape.constant(Tensor::vector(vec![50.0, 0.0, 0.0, 0.0]));
    let l = decision_loss(&mut tape, z, Decision::Yes).unwrap();
    assert!(tape.value(l).item() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let m = rng.gen_range(1..6);
        let logits: Vec<f64> = (0..3 * m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let gold: Vec<EntailmentLabel> = (0..m)
            .map(|_| EntailmentLabel::ALL[rng.gen_range(0..3)])
            .collect();
        let expected: f64 = (0..m)
            .map(|i| {
                let row = &logits[i * 3..i * 3 + 3];
                let lse = row.iter().map(|x| x.exp()).sum::<f64>().ln();
                lse - row[gold[i].index()]
            })
            .sum::<f64>()
            / m as f64;
        let mut tape = Tape::new();
        let e = tape.constant(Tensor::matrix(m, 3, logits.clone()).unwrap());
        let l = entail_loss(&mut tape, e, &gold).unwrap();
        assert!((tape.value(l).item() - expected).abs() < 1e-10);

        // permuting sentences together with their golds leaves the loss alone
        let perm: Vec<usize> = (0..m).rev().collect();
        let permuted: Vec<f64> = perm
            .iter()
            .flat_map(|&i| logits[i * 3..i * 3 + 3].to_vec())
            .collect();
        let pgold: Vec<EntailmentLabel> = perm.iter().map(|&i| gold[i]).collect();
        let e = tape.constant(Tensor::matrix(m, 3, permuted).unwrap());
        let lp = entail_loss(&mut tape, e, &pgold).unwrap();
        assert!((tape.value(lp).item() - expected).abs() < 1e-10);
    }
}

#[test]
fn argmax_prefers_earliest_on_ties() {
    assert_eq!(argmax_first(&[1.0, 3.0, 3.0]), 1);
    assert_eq!(argmax_first(&[0.0, 0.0]), 0);
}
