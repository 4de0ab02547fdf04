//! Annotated data: domain types, the word tokenizer, and the two on-disk
//! annotation formats (`$T$` aspect-polarity blocks and token/tag/polarity
//! lines).

mod apc;
mod atepc;
mod tokenize;
mod types;

use thiserror::Error;

pub use apc::{parse_apc, serialize_apc, MARKER};
pub use atepc::{apc_to_atepc, parse_atepc, serialize_atepc};
pub use tokenize::{is_punctuation, tokenize};
pub use types::{
    join_tokens, tokens_from, ApcRecord, AtepcSentence, OverallLabeledReview, Polarity, Slot, Span, Tag,
    Token,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("overlapping aspects {first} and {second} in {sentence:?}")]
    OverlappingSpans { sentence: String, first: Span, second: Span },
}
