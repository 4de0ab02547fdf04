//! The `$T$` aspect-polarity format: three lines per aspect (sentence with the
//! aspect replaced by the marker, the aspect term, the polarity), blocks
//! separated by blank lines. A sentence with k aspects appears k times.

use super::{join_tokens, ApcRecord, CorpusError, Polarity, Span, Token};

pub const MARKER: &str = "$T$";

fn parse_error(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse { line, message: message.into() }
}

fn words(line: &str, line_no: usize) -> Result<Vec<Token>, CorpusError> {
    line.split_whitespace()
        .map(|w| Token::new(w).map_err(|e| parse_error(line_no, e.to_string())))
        .collect()
}

/// Non-blank line runs, each paired with the 1-based number of its first line.
pub(crate) fn blocks(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut first = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push((first, std::mem::take(&mut current)));
            }
        } else {
            if current.is_empty() {
                first = i + 1;
            }
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push((first, current));
    }
    out
}

fn parse_block(first: usize, lines: &[&str]) -> Result<ApcRecord, CorpusError> {
    if lines.len() != 3 {
        let at = first + lines.len().min(3);
        return Err(parse_error(
            at,
            format!("expected 3 lines (sentence, aspect, polarity), block has {}", lines.len()),
        ));
    }
    let (sentence, aspect, polarity) = (lines[0], lines[1], lines[2]);

    let marker_count = sentence.matches(MARKER).count();
    if marker_count == 0 {
        return Err(parse_error(first, format!("missing {MARKER} marker")));
    }
    if marker_count > 1 {
        return Err(parse_error(first, format!("{marker_count} {MARKER} markers, expected one")));
    }

    let aspect_tokens = words(aspect, first + 1)?;
    if aspect_tokens.is_empty() {
        return Err(parse_error(first + 1, "blank aspect term"));
    }
    let polarity: Polarity = polarity
        .trim()
        .parse()
        .map_err(|_| parse_error(first + 2, format!("unknown polarity {:?}", polarity.trim())))?;

    let mut tokens = Vec::new();
    let mut start = None;
    for word in sentence.split_whitespace() {
        match word.find(MARKER) {
            None => tokens.push(Token::new(word).map_err(|e| parse_error(first, e.to_string()))?),
            Some(at) => {
                let (before, after) = (&word[..at], &word[at + MARKER.len()..]);
                if !before.is_empty() {
                    tokens.push(Token::new(before).map_err(|e| parse_error(first, e.to_string()))?);
                }
                start = Some(tokens.len());
                tokens.extend(aspect_tokens.iter().cloned());
                if !after.is_empty() {
                    tokens.push(Token::new(after).map_err(|e| parse_error(first, e.to_string()))?);
                }
            }
        }
    }
    let start = start.expect("marker counted above");
    let span = Span::new(start, start + aspect_tokens.len() - 1);
    ApcRecord::new(tokens, span, polarity).map_err(|e| parse_error(first, e.to_string()))
}

/// Parses every block of an APC file, in file order.
pub fn parse_apc(text: &str) -> Result<Vec<ApcRecord>, CorpusError> {
    blocks(text)
        .into_iter()
        .map(|(first, lines)| parse_block(first, &lines))
        .collect()
}

fn marked_sentence(record: &ApcRecord) -> String {
    let span = record.aspect_span;
    let mut parts: Vec<&str> = record.tokens[..span.start].iter().map(Token::as_str).collect();
    parts.push(MARKER);
    parts.extend(record.tokens[span.end + 1..].iter().map(Token::as_str));
    join_tokens(&parts)
}

/// Inverse of [`parse_apc`]. Blocks end with a newline and are separated by
/// one blank line.
pub fn serialize_apc(records: &[ApcRecord]) -> String {
    let mut out = String::new();
    for (i, record) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&marked_sentence(record));
        out.push('\n');
        out.push_str(&record.aspect_term());
        out.push('\n');
        out.push_str(record.polarity.as_str());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens_from;

    const SAMPLE: &str = "Nice $T$ for sport activities the area is very clean\nplayground\nPositive\n\n\
Nice playground for $T$ activities the area is very clean\nsport\nPositive\n\n\
Nice playground for sport activities the $T$ is very clean\narea\nPositive\n";

    #[test]
    fn parses_sample_blocks() {
        let records = parse_apc(SAMPLE).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].aspect_span, Span::single(1));
        assert_eq!(records[0].aspect_term(), "playground");
        assert_eq!(records[1].aspect_span, Span::single(3));
        assert_eq!(records[1].aspect_term(), "sport");
        assert_eq!(records[2].aspect_span, Span::single(6));
        for r in &records {
            assert_eq!(r.polarity, Polarity::Positive);
            assert_eq!(r.sentence(), "Nice playground for sport activities the area is very clean");
        }
    }

    #[test]
    fn serializes_back_to_sample() {
        let records = parse_apc(SAMPLE).unwrap();
        assert_eq!(serialize_apc(&records), SAMPLE);
    }

    #[test]
    fn empty_input_and_output() {
        assert!(parse_apc("").unwrap().is_empty());
        assert!(parse_apc("\n\n").unwrap().is_empty());
        assert_eq!(serialize_apc(&[]), "");
    }

    #[test]
    fn multi_token_aspect_uses_one_marker() {
        let r = ApcRecord::new(
            tokens_from(&["the", "dog", "park", "is", "muddy"]).unwrap(),
            Span::new(1, 2),
            Polarity::Negative,
        )
        .unwrap();
        let text = serialize_apc(std::slice::from_ref(&r));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "the $T$ is muddy");
        assert_eq!(lines[0].matches(MARKER).count(), 1);
        assert_eq!(lines[1], "dog park");
        assert_eq!(parse_apc(&text).unwrap(), vec![r]);
    }

    #[test]
    fn rejects_abbreviated_polarity() {
        let err = parse_apc("Nice $T$\nplayground\nPos\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_missing_and_duplicate_markers() {
        let err = parse_apc("\nNice playground\nplayground\nPositive\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err}");
        let err = parse_apc("$T$ and $T$\npark\nPositive\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_incomplete_block() {
        let err = parse_apc("Nice $T$\n\nPositive\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { .. }), "{err}");
    }

    #[test]
    fn marker_glued_to_punctuation_is_split() {
        let r = parse_apc("Lovely $T$.\npond\nPositive").unwrap();
        assert_eq!(r[0].sentence(), "Lovely pond .");
        assert_eq!(r[0].aspect_span, Span::single(1));
    }

    #[test]
    fn tolerates_crlf() {
        let r = parse_apc("Nice $T$\r\nplayground\r\nNeutral\r\n").unwrap();
        assert_eq!(r[0].polarity, Polarity::Neutral);
        assert_eq!(r[0].aspect_term(), "playground");
    }
}
