//! Data model, ShARC ingestion, synthetic generation and the span /
//! entailment / augmentation heuristics.

pub mod augment;
pub mod labeling;
pub mod segment;
pub mod sharc;
pub mod store;
pub mod synthetic;
pub mod tokenize;
pub mod types;

pub use augment::{augment, augment_corpus, render_evidence, render_statement};
pub use labeling::{edit_distance, label_entailment, label_span};
pub use segment::{segment_rules, EmptyDocument, RuleDocument, RuleSentence};
pub use sharc::{load_sharc, parse_sharc, IngestError};
pub use store::{label_corpus, CorpusFile, CorpusFileError, LabeledExample};
pub use synthetic::{
    generate_split, generate_synthetic, Logic, SyntheticConfig, SyntheticCorpus, SyntheticExample,
};
pub use tokenize::{detokenize, tokenize, trim_question};
pub use types::{
    Answer, Decision, DialogExample, EntailmentLabel, ExampleError, QaTurn, Span, UnparseableAnswer,
};
