use serde::{Deserialize, Serialize};

use super::param::{ParamGrads, ParamStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// Fraction of `total_steps` over which the learning rate ramps up
    /// linearly from zero.
    pub warmup_fraction: f64,
    pub total_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            warmup_fraction: 0.1,
            total_steps: 1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments and a linear warm-up that then holds
/// the learning rate constant.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .iter()
            .map(|(_, p)| vec![0.0; p.value.len()])
            .collect();
        Self {
            config,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Learning rate applied at 1-based step `step`.
    pub fn learning_rate_at(&self, step: u64) -> f64 {
        let warmup = (self.config.warmup_fraction * self.config.total_steps as f64).ceil();
        if warmup <= 0.0 {
            return self.config.learning_rate;
        }
        self.config.learning_rate * (step as f64 / warmup).min(1.0)
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &ParamGrads) {
        self.step += 1;
        let lr = self.learning_rate_at(self.step);
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let ids: Vec<_> = store.iter().map(|(id, p)| (id, p.trainable)).collect();
        for (id, trainable) in ids {
            if !trainable {
                continue;
            }
            let g = grads.get(id);
            let m = &mut self.first[id.index()];
            let v = &mut self.second[id.index()];
            let values = store.get_mut(id).value.data_mut();
            for k in 0..values.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                values[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Tape, Tensor};

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut store = ParamStore::new();
        let id = store
            .add("w", Tensor::vector(vec![1.0, -2.0, 0.5]))
            .unwrap();
        // loss = 3·w0 − 0.25·w1 + 0·w2
        let mut tape = Tape::new();
        let w = tape.param(&store, id);
        let c = tape.constant(Tensor::vector(vec![3.0, -0.25, 0.0]));
        let loss = tape.dot(w, c).unwrap();
        let grads = tape.backward(loss).unwrap();
        let mut pg = ParamGrads::zeros(&store);
        pg.accumulate(&tape, &grads);

        let config = AdamConfig {
            learning_rate: 0.01,
            warmup_fraction: 0.0,
            total_steps: 10,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(config, &store);
        adam.step(&mut store, &pg);
        let after = store.get(id).value.data();
        // hand evaluation: m̂ = g, v̂ = g², update = lr·g/(|g|+ε)
        let expected = [
            1.0 - 0.01 * 3.0 / (3.0 + 1e-8),
            -2.0 + 0.01 * 0.25 / (0.25 + 1e-8),
            0.5,
        ];
        for (a, e) in after.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15, "{a} vs {e}");
        }
    }

    #[test]
    fn warmup_is_linear_then_constant() {
        let store = ParamStore::new();
        let config = AdamConfig {
            learning_rate: 1.0,
            warmup_fraction: 0.1,
            total_steps: 100,
            ..AdamConfig::default()
        };
        let adam = Adam::new(config, &store);
        assert_eq!(adam.learning_rate_at(1), 0.1);
        assert_eq!(adam.learning_rate_at(5), 0.5);
        assert_eq!(adam.learning_rate_at(10), 1.0);
        assert_eq!(adam.learning_rate_at(90), 1.0);
    }

    #[test]
    fn frozen_parameters_do_not_move() {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::vector(vec![1.0])).unwrap();
        store.get_mut(id).trainable = false;
        let mut pg = ParamGrads::zeros(&store);
        pg.scale(0.0);
        let mut adam = Adam::new(AdamConfig::default(), &store);
        adam.step(&mut store, &pg);
        assert_eq!(store.get(id).value.data(), &[1.0]);
    }
}
