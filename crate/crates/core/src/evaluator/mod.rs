//! Decision / entailment accuracies, corpus BLEU, and the two evaluation
//! protocols: end-to-end (BLEU on the mutual-Inquire subset) and oracle
//! question generation (BLEU on the gold-Inquire subset).

mod bleu;
mod metrics;
mod protocols;

pub use bleu::{bleu, bleu_text, BleuScores};
pub use metrics::{classwise_accuracy, micro_macro_accuracy, ClassAccuracy, Label};
pub use protocols::{
    end_to_end_eval, end_to_end_from_predictions, entailment_accuracy, entailment_macro_accuracy,
    evaluate, oracle_qg_eval, oracle_qg_from_generator, predict_all, question_for,
    sentence_identification_accuracy, span_f1, EndToEndReport, Evaluation, OracleQgReport,
    TurnPrediction, LOW_SPAN_F1,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{preds} predictions for {golds} references")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("BLEU order must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Rephrase(#[from] crate::rephrase::RephraseError),
}
