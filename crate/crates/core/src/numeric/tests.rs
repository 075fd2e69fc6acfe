use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

type Build = dyn Fn(&mut Tape, &[Var]) -> Result<Var>;

fn analytic(inputs: &[Tensor], f: &Build) -> Vec<Vec<f64>> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&mut tape, &vars).unwrap();
    let g = tape.backward(loss).unwrap();
    vars.iter().map(|&v| g.wrt_or_zero(&tape, v)).collect()
}

fn eval(inputs: &[Tensor], f: &Build) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let loss = f(&mut tape, &vars).unwrap();
    tape.value(loss).item()
}

fn numeric(inputs: &[Tensor], f: &Build, h: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..inputs.len() {
        let mut g = vec![0.0; inputs[i].len()];
        for k in 0..inputs[i].len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= h;
            g[k] = (eval(&plus, f) - eval(&minus, f)) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

fn check(inputs: &[Tensor], f: &Build) {
    let a = analytic(inputs, f);
    let n = numeric(inputs, f, 1e-5);
    for (i, (ga, gn)) in a.iter().zip(&n).enumerate() {
        let e = rel_err(ga, gn);
        assert!(
            e < 1e-4,
            "input {i}: rel err {e:e}\n analytic {ga:?}\n numeric {gn:?}"
        );
    }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

#[test]
fn matvec_identity_and_zero() {
    let mut tape = Tape::new();
    let eye = tape.constant(Tensor::identity(2));
    let v = tape.constant(Tensor::vector(vec![3.0, 4.0]));
    let out = tape.matvec(eye, v).unwrap();
    assert_eq!(tape.value(out).data(), &[3.0, 4.0]);
    let zero = tape.constant(Tensor::zeros(&[2, 2]));
    let out = tape.matvec(zero, v).unwrap();
    assert_eq!(tape.value(out).data(), &[0.0, 0.0]);
}

#[test]
fn matvec_rejects_mismatched_shapes() {
    let mut tape = Tape::new();
    let m = tape.constant(Tensor::zeros(&[2, 3]));
    let v = tape.constant(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(
        tape.matvec(m, v),
        Err(NumericError::ShapeMismatch { op: "matvec", .. })
    ));
}

#[test]
fn matvec_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inputs = [rand_tensor(&mut rng, &[3, 3]), rand_tensor(&mut rng, &[3])];
    check(&inputs, &|t, v| {
        let y = t.matvec(v[0], v[1])?;
        Ok(t.sum(y))
    });
}

#[test]
fn elementary_values() {
    let mut tape = Tape::new();
    let z = tape.constant(Tensor::vector(vec![0.0]));
    let s = tape.sigmoid(z);
    assert_eq!(tape.value(s).data(), &[0.5]);

    let zz = tape.constant(Tensor::vector(vec![0.0, 0.0]));
    let sm = tape.softmax(zz);
    assert_eq!(tape.value(sm).data(), &[0.5, 0.5]);

    let x = tape.constant(Tensor::vector(vec![2.0, 0.5]));
    let n = tape.l2_normalize(x).unwrap();
    let inv = 1.0 / 4.25f64.sqrt();
    assert!((tape.value(n).data()[0] - 2.0 * inv).abs() < 1e-12);
    assert!((tape.value(n).data()[0] - 0.9701).abs() < 1e-3);
    assert!((tape.value(n).data()[1] - 0.2425).abs() < 1e-3);
}

#[test]
fn l2_normalize_rejects_near_zero() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![1e-13, 0.0]));
    assert!(matches!(
        tape.l2_normalize(x),
        Err(NumericError::DegenerateNorm { .. })
    ));
}

#[test]
fn cross_entropy_values() {
    let mut tape = Tape::new();
    let l = tape.constant(Tensor::vector(vec![0.0; 4]));
    let ce = tape.cross_entropy(l, 0).unwrap();
    assert!((tape.value(ce).item() - 4f64.ln()).abs() < 1e-12);

    let l = tape.constant(Tensor::vector(vec![1e4, 0.0, 0.0]));
    let ce = tape.cross_entropy(l, 0).unwrap();
    assert!(tape.value(ce).item().abs() < 1e-12);

    assert!(matches!(
        tape.cross_entropy(l, 3),
        Err(NumericError::IndexOutOfRange { index: 3, len: 3 })
    ));
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for target in 0..5 {
        let inputs = [rand_tensor(&mut rng, &[5])];
        check(&inputs, &move |t, v| t.cross_entropy(v[0], target));
    }
}

#[test]
fn backward_requires_scalar() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(
        tape.backward(x),
        Err(NumericError::NotScalar { .. })
    ));
}

#[test]
fn unrelated_parameter_gets_zero_gradient() {
    let mut store = ParamStore::new();
    let used = store.add("used", Tensor::vector(vec![1.0, 2.0])).unwrap();
    let unused = store.add("unused", Tensor::vector(vec![5.0])).unwrap();
    let mut tape = Tape::new();
    let u = tape.param(&store, used);
    let p = tape.param(&store, unused);
    let loss = tape.sum(u);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt_or_zero(&tape, p), vec![0.0]);
    let mut pg = ParamGrads::zeros(&store);
    pg.accumulate(&tape, &g);
    assert_eq!(pg.get(unused), &[0.0]);
    assert_eq!(pg.get(used), &[1.0, 1.0]);
}

#[test]
fn relu_subgradient_at_zero_is_zero() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![0.0, 1.0, -1.0]));
    let r = tape.relu(x);
    let loss = tape.sum(r);
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(x).unwrap(), &[0.0, 1.0, 0.0]);
}

#[test]
fn composite_graph_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let inputs = [
            rand_tensor(&mut rng, &[4, 3]),
            rand_tensor(&mut rng, &[3]),
            rand_tensor(&mut rng, &[4]),
        ];
        check(&inputs, &|t, v| {
            let h = t.matvec(v[0], v[1])?;
            let r = t.relu(h);
            t.dot(r, v[2])
        });
    }
}

#[test]
fn every_op_passes_random_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..8 {
        let (r, c) = (2 + round % 3, 2 + round % 4);
        let a = rand_tensor(&mut rng, &[r, c]);
        let b = rand_tensor(&mut rng, &[r, c]);
        let bt = rand_tensor(&mut rng, &[c + 1, c]);
        let row = rand_tensor(&mut rng, &[c]);
        let rw = rand_tensor(&mut rng, &[r]);
        let s = rand_tensor(&mut rng, &[1]);
        let probe = rand_tensor(&mut rng, &[r, c]);
        let probe_vec = rand_tensor(&mut rng, &[c]);

        // matmul in both orientations, weighted by a probe so the loss is not
        // a plain sum
        check(&[a.clone(), bt.clone()], &|t, v| {
            let y = t.matmul(v[0], v[1], true)?;
            let s = t.sigmoid(y);
            Ok(t.sum(s))
        });
        let bmat = rand_tensor(&mut rng, &[c, r + 1]);
        check(&[a.clone(), bmat], &|t, v| {
            let y = t.matmul(v[0], v[1], false)?;
            let s = t.sigmoid(y);
            Ok(t.sum(s))
        });
        let p = probe.clone();
        check(&[a.clone(), b.clone()], &move |t, v| {
            let x = t.add(v[0], v[1])?;
            let y = t.mul(x, v[1])?;
            let pr = t.constant(p.clone());
            let z = t.mul(y, pr)?;
            Ok(t.sum(z))
        });
        let p = probe.clone();
        check(&[a.clone(), row.clone(), s.clone()], &move |t, v| {
            let x = t.add_row(v[0], v[1])?;
            let x = t.add_scalar(x, v[2])?;
            let x = t.scale_by(x, v[2])?;
            let x = t.scale(x, 0.7);
            let pr = t.constant(p.clone());
            let z = t.mul(x, pr)?;
            Ok(t.sum(z))
        });
        let p = probe.clone();
        check(&[a.clone(), rw.clone()], &move |t, v| {
            let x = t.scale_rows(v[0], v[1])?;
            let x = t.softmax(x);
            let pr = t.constant(p.clone());
            let z = t.mul(x, pr)?;
            Ok(t.sum(z))
        });
        let p = probe.clone();
        check(&[a.clone()], &move |t, v| {
            let x = t.l2_normalize(v[0])?;
            let pr = t.constant(p.clone());
            let z = t.mul(x, pr)?;
            Ok(t.sum(z))
        });
        let p = probe_vec.clone();
        check(&[row.clone()], &move |t, v| {
            let x = t.l2_normalize(v[0])?;
            let pr = t.constant(p.clone());
            t.dot(x, pr)
        });
        check(&[a.clone(), b.clone()], &move |t, v| {
            let x = t.concat(v[0], v[1])?;
            let x = t.sigmoid(x);
            let g = t.gather(x, &[0, r - 1, 0])?;
            let col = t.column(g, 1)?;
            let w = t.softmax(col);
            let s = t.weighted_row_sum(w, g)?;
            let s = t.relu(s);
            Ok(t.sum(s))
        });
        check(&[row.clone(), probe_vec.clone()], &|t, v| {
            let x = t.concat(v[0], v[1])?;
            let g = t.gather(x, &[1, 1, 0])?;
            let s = t.sigmoid(g);
            t.dot(s, s)
        });
        check(&[a.clone()], &move |t, v| {
            let x = t.row(v[0], r - 1)?;
            let y = t.sigmoid(x);
            t.dot(x, y)
        });
        let targets: Vec<usize> = (0..r).map(|i| i % c).collect();
        check(&[a.clone()], &move |t, v| {
            t.cross_entropy_rows(v[0], &targets)
        });
    }
}

#[test]
fn softmax_is_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x = rand_tensor(&mut rng, &[6]);
        let c: f64 = rng.gen_range(-50.0..50.0);
        let mut tape = Tape::new();
        let a = tape.constant(x.clone());
        let shifted = tape.constant(Tensor::vector(x.data().iter().map(|v| v + c).collect()));
        let sa = tape.softmax(a);
        let sb = tape.softmax(shifted);
        let total: f64 = tape.value(sa).data().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (p, q) in tape.value(sa).data().iter().zip(tape.value(sb).data()) {
            assert!(*p > 0.0);
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn forward_and_backward_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inputs = [rand_tensor(&mut rng, &[5, 4]), rand_tensor(&mut rng, &[4])];
        let mut tape = Tape::new();
        let w = tape.leaf(inputs[0].clone());
        let x = tape.leaf(inputs[1].clone());
        let h = tape.matvec(w, x).unwrap();
        let h = tape.dropout(h, 0.3, &mut rng).unwrap();
        let s = tape.softmax(h);
        let loss = tape.cross_entropy(s, 2).unwrap();
        let g = tape.backward(loss).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        (
            bits(tape.value(loss).data()),
            bits(g.wrt(w).unwrap()),
            bits(g.wrt(x).unwrap()),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn dropout_preserves_expectation_and_is_identity_at_zero_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![1.0; 20000]));
    let same = tape.dropout(x, 0.0, &mut rng).unwrap();
    assert_eq!(same, x);
    let d = tape.dropout(x, 0.25, &mut rng).unwrap();
    let mean: f64 = tape.value(d).data().iter().sum::<f64>() / 20000.0;
    assert!((mean - 1.0).abs() < 0.03, "{mean}");
}

#[test]
fn parameter_registered_twice_accumulates_once() {
    let mut store = ParamStore::new();
    let id = store.add("w", Tensor::vector(vec![2.0])).unwrap();
    let mut tape = Tape::new();
    let a = tape.param(&store, id);
    let b = tape.param(&store, id);
    assert_eq!(a, b);
    let loss = tape.dot(a, b).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.wrt(a).unwrap(), &[4.0]);
}
