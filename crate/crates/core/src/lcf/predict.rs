use serde::{Deserialize, Serialize};

use super::linalg::{argmax, softmax};
use super::{decode_bio, LcfModel, ModelError, Vocab};
use crate::corpus::{join_tokens, tokenize, Polarity, Span, Tag, Token};

/// One extracted aspect with its predicted sentiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectPrediction {
    pub term: String,
    pub span: Span,
    pub polarity: Polarity,
    pub confidence: f64,
}

/// Anything that can tag aspects and classify their polarity. Implemented by
/// the trained model and by test doubles.
pub trait AspectModel: Sync {
    /// Longest token sequence accepted in one call.
    fn max_len(&self) -> usize;

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Tag>, ModelError>;

    /// Polarity and softmax confidence for each span.
    fn classify(&self, tokens: &[Token], spans: &[Span]) -> Result<Vec<(Polarity, f64)>, ModelError>;

    /// Tagging followed by classification of the decoded spans.
    fn extract(&self, tokens: &[Token]) -> Result<Vec<AspectPrediction>, ModelError> {
        let decoded = decode_bio(&self.tag(tokens)?);
        if decoded.repairs > 0 {
            tracing::debug!(repairs = decoded.repairs, "repaired ill-formed BIO tags");
        }
        let classes = self.classify(tokens, &decoded.spans)?;
        Ok(assemble(tokens, &decoded.spans, classes))
    }
}

fn assemble(tokens: &[Token], spans: &[Span], classes: Vec<(Polarity, f64)>) -> Vec<AspectPrediction> {
    spans
        .iter()
        .zip(classes)
        .map(|(span, (polarity, confidence))| AspectPrediction {
            term: join_tokens(&tokens[span.start..=span.end]),
            span: *span,
            polarity,
            confidence,
        })
        .collect()
}

fn polarity_of(logits: &[f64; 3]) -> (Polarity, f64) {
    let probs = softmax(logits);
    let best = argmax(&probs);
    (Polarity::from_index(best).expect("three classes"), probs[best])
}

/// A trained encoder together with the vocabulary it was trained on.
#[derive(Debug, Clone)]
pub struct AbsaModel {
    pub vocab: Vocab,
    pub model: LcfModel,
}

impl AbsaModel {
    pub fn new(vocab: Vocab, model: LcfModel) -> Result<Self, ModelError> {
        if vocab.len() != model.config().vocab_size {
            return Err(ModelError::Config(format!(
                "vocabulary has {} entries but the model expects {}",
                vocab.len(),
                model.config().vocab_size
            )));
        }
        Ok(AbsaModel { vocab, model })
    }
}

impl AspectModel for AbsaModel {
    fn max_len(&self) -> usize {
        self.model.config().max_len
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Tag>, ModelError> {
        let out = self.model.forward(&self.vocab.encode(tokens), None)?;
        Ok(out.tag_logits.iter().map(|l| Tag::from_index(argmax(l)).expect("three tags")).collect())
    }

    fn classify(&self, tokens: &[Token], spans: &[Span]) -> Result<Vec<(Polarity, f64)>, ModelError> {
        let (_, logits) = self.model.forward_spans(&self.vocab.encode(tokens), spans)?;
        Ok(logits.iter().map(polarity_of).collect())
    }

    /// Shares one encoder pass between both heads.
    fn extract(&self, tokens: &[Token]) -> Result<Vec<AspectPrediction>, ModelError> {
        let ids = self.vocab.encode(tokens);
        let n = ids.len();
        let states = self.model.encode(&ids)?;
        let tags: Vec<Tag> = self
            .model
            .tag_logits(&states, n)
            .iter()
            .map(|l| Tag::from_index(argmax(l)).expect("three tags"))
            .collect();
        let decoded = decode_bio(&tags);
        if decoded.repairs > 0 {
            tracing::debug!(repairs = decoded.repairs, "repaired ill-formed BIO tags");
        }
        let classes = decoded
            .spans
            .iter()
            .map(|s| polarity_of(&self.model.span_polarity_logits(&states, n, *s)))
            .collect();
        Ok(assemble(tokens, &decoded.spans, classes))
    }
}

const SENTENCE_END: &[&str] = &[".", "!", "?"];

/// Splits a token sequence into windows of at most `max_len` tokens, cutting
/// after sentence-final punctuation where possible. Returns start offsets.
pub fn windows(tokens: &[Token], max_len: usize) -> Vec<std::ops::Range<usize>> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if SENTENCE_END.contains(&t.as_str()) {
            sentences.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        sentences.push(start..tokens.len());
    }
    let mut out: Vec<std::ops::Range<usize>> = Vec::new();
    for s in sentences {
        let mut s = s;
        while s.len() > max_len {
            out.push(s.start..s.start + max_len);
            s = s.start + max_len..s.end;
        }
        match out.last_mut() {
            Some(last) if last.end == s.start && last.len() + s.len() <= max_len => last.end = s.end,
            _ => out.push(s),
        }
    }
    out
}

/// Tokenizes a review and extracts aspects with their polarity, ordered by
/// position. Reviews longer than the model window are processed in
/// sentence-aligned windows.
pub fn predict(text: &str, model: &dyn AspectModel) -> Result<Vec<AspectPrediction>, ModelError> {
    let tokens = tokenize(text);
    let mut out = Vec::new();
    for w in windows(&tokens, model.max_len()) {
        for mut p in model.extract(&tokens[w.clone()])? {
            p.span = Span::new(p.span.start + w.start, p.span.end + w.start);
            out.push(p);
        }
    }
    out.sort_by_key(|p| p.span.start);
    Ok(out)
}
