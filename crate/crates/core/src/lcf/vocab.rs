use std::collections::{BTreeSet, HashMap};

use crate::corpus::Token;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const PAD_TEXT: &str = "<pad>";
const UNK_TEXT: &str = "<unk>";

/// Lower-cased word vocabulary. Id 0 is padding, id 1 is unknown, the rest
/// are sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

fn normalize(word: &str) -> String {
    word.to_lowercase()
}

impl Vocab {
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let set: BTreeSet<String> = tokens.into_iter().map(|t| normalize(t.as_str())).collect();
        let words = [PAD_TEXT.to_string(), UNK_TEXT.to_string()]
            .into_iter()
            .chain(set.into_iter().filter(|w| w != PAD_TEXT && w != UNK_TEXT))
            .collect();
        Self::from_words(words)
    }

    fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(&normalize(word)).copied().unwrap_or(UNK)
    }

    pub fn encode<T: AsRef<str>>(&self, tokens: &[T]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// One token per line; the line number is the id.
    pub fn to_text(&self) -> String {
        let mut out = self.words.join("\n");
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let words: Vec<String> = text.lines().map(str::to_owned).collect();
        Self::from_list(words)
    }

    pub fn from_list(words: Vec<String>) -> Result<Self, String> {
        if words.len() < 2 || words[PAD] != PAD_TEXT || words[UNK] != UNK_TEXT {
            return Err("vocabulary must start with <pad> and <unk>".into());
        }
        let v = Self::from_words(words);
        if v.index.len() != v.words.len() {
            return Err("vocabulary contains duplicate entries".into());
        }
        Ok(v)
    }
}
