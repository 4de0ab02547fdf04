use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Aspect sentiment label. The string forms are the ones written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "Positive",
            Polarity::Negative => "Negative",
            Polarity::Neutral => "Neutral",
        }
    }

    /// Column of this class in the polarity head output.
    pub fn index(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
            Polarity::Neutral => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Polarity> {
        Polarity::ALL.get(i).copied()
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Positive" => Ok(Polarity::Positive),
            "Negative" => Ok(Polarity::Negative),
            "Neutral" => Ok(Polarity::Neutral),
            other => Err(CorpusError::Invalid(format!("unknown polarity {other:?}"))),
        }
    }
}

/// BIO tag for aspect term extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    O,
    #[serde(rename = "B-ASP")]
    BeginAspect,
    #[serde(rename = "I-ASP")]
    InsideAspect,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::O, Tag::BeginAspect, Tag::InsideAspect];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::O => "O",
            Tag::BeginAspect => "B-ASP",
            Tag::InsideAspect => "I-ASP",
        }
    }

    /// Column of this tag in the tag head output.
    pub fn index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::BeginAspect => 1,
            Tag::InsideAspect => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Tag::ALL.get(i).copied()
    }

    pub fn is_aspect(self) -> bool {
        self != Tag::O
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "O" => Ok(Tag::O),
            "B-ASP" => Ok(Tag::BeginAspect),
            "I-ASP" => Ok(Tag::InsideAspect),
            other => Err(CorpusError::Invalid(format!("unknown tag {other:?}"))),
        }
    }
}

/// Polarity column of an ATEPC line: a label on the focused aspect, the
/// `-999` sentinel everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Sentinel,
    Label(Polarity),
}

impl Slot {
    pub const SENTINEL_TEXT: &'static str = "-999";

    pub fn label(self) -> Option<Polarity> {
        match self {
            Slot::Sentinel => None,
            Slot::Label(p) => Some(p),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Sentinel => Self::SENTINEL_TEXT,
            Slot::Label(p) => p.as_str(),
        }
    }
}

impl FromStr for Slot {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::SENTINEL_TEXT {
            Ok(Slot::Sentinel)
        } else {
            s.parse().map(Slot::Label)
        }
    }
}

/// A single whitespace-free token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() {
            return Err(CorpusError::Invalid("empty token".into()));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(CorpusError::Invalid(format!("token {text:?} contains whitespace")));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds tokens from string slices, failing on the first invalid one.
pub fn tokens_from<S: AsRef<str>>(words: &[S]) -> Result<Vec<Token>, CorpusError> {
    words.iter().map(|w| Token::new(w.as_ref())).collect()
}

/// Joins tokens with single spaces: the canonical sentence form.
pub fn join_tokens<T: AsRef<str>>(tokens: &[T]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Inclusive token span `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start after end");
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn fits(&self, n: usize) -> bool {
        self.start <= self.end && self.end < n
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.start, self.end)
    }
}

/// One aspect of one sentence: the unit of the `$T$` format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApcRecord {
    pub tokens: Vec<Token>,
    pub aspect_span: Span,
    pub polarity: Polarity,
}

impl ApcRecord {
    pub fn new(tokens: Vec<Token>, aspect_span: Span, polarity: Polarity) -> Result<Self, CorpusError> {
        let record = ApcRecord { tokens, aspect_span, polarity };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if !self.aspect_span.fits(self.tokens.len()) {
            return Err(CorpusError::Invalid(format!(
                "aspect span {} outside sentence of {} tokens",
                self.aspect_span,
                self.tokens.len()
            )));
        }
        if let Some(t) = self.tokens.iter().find(|t| t.as_str().contains(super::apc::MARKER)) {
            return Err(CorpusError::Invalid(format!("token {t} contains the aspect marker")));
        }
        Ok(())
    }

    pub fn aspect_tokens(&self) -> &[Token] {
        &self.tokens[self.aspect_span.start..=self.aspect_span.end]
    }

    pub fn aspect_term(&self) -> String {
        join_tokens(self.aspect_tokens())
    }

    pub fn sentence(&self) -> String {
        join_tokens(&self.tokens)
    }
}

/// A tokenized sentence in the joint extraction/classification format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtepcSentence {
    pub tokens: Vec<Token>,
    pub tags: Vec<Tag>,
    pub slots: Vec<Slot>,
}

impl AtepcSentence {
    pub fn new(tokens: Vec<Token>, tags: Vec<Tag>, slots: Vec<Slot>) -> Result<Self, CorpusError> {
        let s = AtepcSentence { tokens, tags, slots };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence(&self) -> String {
        join_tokens(&self.tokens)
    }

    /// Maximal B/I spans of the tag sequence. Assumes well-formed tags.
    pub fn spans(&self) -> Vec<Span> {
        strict_spans(&self.tags)
    }

    /// The aspect that carries a polarity label in this copy.
    pub fn focused(&self) -> Option<(Span, Polarity)> {
        self.spans().into_iter().find_map(|span| {
            self.slots[span.start].label().map(|p| (span, p))
        })
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(CorpusError::Invalid("empty sentence".into()));
        }
        if self.tags.len() != n || self.slots.len() != n {
            return Err(CorpusError::Invalid(format!(
                "length mismatch: {} tokens, {} tags, {} slots",
                n,
                self.tags.len(),
                self.slots.len()
            )));
        }
        for (i, tag) in self.tags.iter().enumerate() {
            if *tag == Tag::InsideAspect && (i == 0 || self.tags[i - 1] == Tag::O) {
                return Err(CorpusError::Invalid(format!("I-ASP at token {i} does not continue a span")));
            }
            if self.slots[i] != Slot::Sentinel && !tag.is_aspect() {
                return Err(CorpusError::Invalid(format!("polarity on untagged token {i}")));
            }
        }
        let mut focused = 0;
        for span in self.spans() {
            let slots = &self.slots[span.start..=span.end];
            match slots[0] {
                Slot::Sentinel => {
                    if slots.iter().any(|s| *s != Slot::Sentinel) {
                        return Err(CorpusError::Invalid(format!("span {span} is partially labelled")));
                    }
                }
                label => {
                    if slots.iter().any(|s| *s != label) {
                        return Err(CorpusError::Invalid(format!("span {span} mixes polarity labels")));
                    }
                    focused += 1;
                }
            }
        }
        if focused != 1 {
            return Err(CorpusError::Invalid(format!(
                "expected exactly one labelled aspect, found {focused}"
            )));
        }
        Ok(())
    }
}

/// Spans of a well-formed BIO sequence (an I-ASP always continues a span).
pub(crate) fn strict_spans(tags: &[Tag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => {
                if let Some(s) = open.take() {
                    spans.push(Span::new(s, i - 1));
                }
            }
            Tag::BeginAspect => {
                if let Some(s) = open.replace(i) {
                    spans.push(Span::new(s, i - 1));
                }
            }
            Tag::InsideAspect => {
                if open.is_none() {
                    open = Some(i);
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push(Span::new(s, tags.len() - 1));
    }
    spans
}

/// A review with its manually assigned overall sentiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallLabeledReview {
    pub review: crate::ingest::Review,
    pub overall: Polarity,
}
