use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Decision, EntailmentLabel};

/// A closed label set with dense indices.
pub trait Label: Copy + Eq + Display {
    const COUNT: usize;
    fn index(self) -> usize;
    fn from_index(i: usize) -> Option<Self>;
}

impl Label for Decision {
    const COUNT: usize = 4;
    fn index(self) -> usize {
        Decision::index(self)
    }
    fn from_index(i: usize) -> Option<Self> {
        Decision::from_index(i)
    }
}

impl Label for EntailmentLabel {
    const COUNT: usize = 3;
    fn index(self) -> usize {
        EntailmentLabel::index(self)
    }
    fn from_index(i: usize) -> Option<Self> {
        EntailmentLabel::from_index(i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub label: String,
    pub correct: usize,
    pub total: usize,
    /// Recall on this class; `None` when it never occurs in the golds.
    pub accuracy: Option<f64>,
}

fn check<L>(preds: &[L], golds: &[L]) -> Result<(), EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn classwise_accuracy<L: Label>(
    preds: &[L],
    golds: &[L],
) -> Result<Vec<ClassAccuracy>, EvalError> {
    check(preds, golds)?;
    let mut correct = vec![0; L::COUNT];
    let mut total = vec![0; L::COUNT];
    for (p, g) in preds.iter().zip(golds) {
        total[g.index()] += 1;
        correct[g.index()] += usize::from(p == g);
    }
    Ok((0..L::COUNT)
        .map(|i| ClassAccuracy {
            label: L::from_index(i).expect("dense label index").to_string(),
            correct: correct[i],
            total: total[i],
            accuracy: (total[i] > 0).then(|| correct[i] as f64 / total[i] as f64),
        })
        .collect())
}

/// `(micro, macro)`: overall fraction correct, and the unweighted mean of
/// per-class recall over classes present in `golds`.
pub fn micro_macro_accuracy<L: Label>(preds: &[L], golds: &[L]) -> Result<(f64, f64), EvalError> {
    let classes = classwise_accuracy(preds, golds)?;
    let correct: usize = classes.iter().map(|c| c.correct).sum();
    let recalls: Vec<f64> = classes.iter().filter_map(|c| c.accuracy).collect();
    Ok((
        correct as f64 / golds.len() as f64,
        recalls.iter().sum::<f64>() / recalls.len() as f64,
    ))
}
