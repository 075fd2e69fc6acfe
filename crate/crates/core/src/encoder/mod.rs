//! Marker-sequence layout and a small trainable attention encoder producing
//! sentence-level (marker) and token-level representations.

mod sequence;
mod transformer;
mod vocab;

pub use sequence::{build_sequence, EncodedInput, Segment, SegmentKind, SequenceConfig};
pub use transformer::{sinusoidal, Encoder, EncoderConfig, EncoderOutput};
pub use vocab::{VocabError, Vocabulary, CLS, UNK, VOCAB_FORMAT_VERSION};

#[cfg(test)]
mod tests;
