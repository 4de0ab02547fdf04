//! Aspect-based sentiment analysis for geo-located urban reviews.
//!
//! The pipeline collects place reviews ([`ingest`]), reads and writes the
//! APC and ATEPC annotation formats ([`corpus`]), trains a small transformer
//! encoder with local context focus that tags aspect terms and classifies
//! their polarity in one pass ([`lcf`], [`train`]), scores it ([`eval`]) and
//! aggregates predictions over space ([`geo`]).

pub mod corpus;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod lcf;
pub mod synth;
pub mod train;
