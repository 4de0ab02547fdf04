//! Joint aspect extraction and polarity classification with local context
//! focus.

mod bio;
mod checkpoint;
mod config;
pub mod linalg;
mod mechanism;
mod model;
mod predict;
mod vocab;

use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Span;

pub use bio::{decode_bio, BioDecoding};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, manifest_path, vocab_path, Manifest, TensorEntry, FORMAT_VERSION, MAGIC};
pub use config::ModelConfig;
pub use mechanism::{cdm_mask, cdw_weights, lcf_weights, srd, LcfMode};
pub use model::{layout_for, ForwardCache, ForwardOutput, LcfModel, Layout, TensorSpec, NUM_POLARITIES, NUM_TAGS};
pub use predict::{predict, windows, AbsaModel, AspectModel, AspectPrediction};
pub use vocab::{Vocab, PAD, UNK};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("input of {len} tokens exceeds max_len {max}")]
    TooLong { len: usize, max: usize },
    #[error("span {span} out of range for {len} tokens")]
    SpanOutOfRange { span: Span, len: usize },
    #[error("token id {id} outside vocabulary of {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },
    #[error("checkpoint {0} not found")]
    MissingCheckpoint(PathBuf),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
