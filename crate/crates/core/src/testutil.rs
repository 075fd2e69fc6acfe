//! Finite-difference gradient oracle over a parameter store.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numeric::{ParamGrads, ParamStore, Result, Tape, Var};

/// Largest relative error (norm-relative, per parameter) between
/// back-propagated gradients and central differences, checking at most
/// `per_param` random coordinates of each trainable parameter.
pub fn max_param_grad_error(
    store: &ParamStore,
    loss: &dyn Fn(&mut Tape, &ParamStore) -> Result<Var>,
    per_param: usize,
    seed: u64,
) -> f64 {
    let mut tape = Tape::new();
    let l = loss(&mut tape, store).unwrap();
    let g = tape.backward(l).unwrap();
    let mut grads = ParamGrads::zeros(store);
    grads.accumulate(&tape, &g);

    let eval = |s: &ParamStore| {
        let mut t = Tape::new();
        let l = loss(&mut t, s).unwrap();
        t.value(l).item()
    };
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut work = store.clone();
    for (id, p) in store.iter() {
        if !p.trainable {
            continue;
        }
        let n = p.value.len();
        let picks = sample(&mut rng, n, per_param.min(n)).into_vec();
        let (mut a, mut num) = (Vec::new(), Vec::new());
        for k in picks {
            let orig = p.value.data()[k];
            work.get_mut(id).value.data_mut()[k] = orig + h;
            let up = eval(&work);
            work.get_mut(id).value.data_mut()[k] = orig - h;
            let down = eval(&work);
            work.get_mut(id).value.data_mut()[k] = orig;
            num.push((up - down) / (2.0 * h));
            a.push(grads.get(id)[k]);
        }
        let diff = a
            .iter()
            .zip(&num)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = a
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(num.iter().map(|x| x * x).sum::<f64>().sqrt());
        worst = worst.max(diff / scale.max(1e-8));
    }
    worst
}
