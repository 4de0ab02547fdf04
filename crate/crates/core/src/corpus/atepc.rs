//! Token-per-line joint format: `<token> <tag> <polarity-or--999>`, sentences
//! separated by blank lines.

use super::apc::blocks;
use super::{ApcRecord, AtepcSentence, CorpusError, Slot, Span, Tag, Token};

/// Expands APC records into one ATEPC copy per record. Every aspect of the
/// sentence is tagged in each copy; only the record's own aspect carries its
/// polarity. Records of one sentence must be contiguous.
pub fn apc_to_atepc(records: &[ApcRecord]) -> Result<Vec<AtepcSentence>, CorpusError> {
    let mut out = Vec::with_capacity(records.len());
    let mut i = 0;
    while i < records.len() {
        let mut j = i + 1;
        while j < records.len() && records[j].tokens == records[i].tokens {
            j += 1;
        }
        let group = &records[i..j];

        let mut spans: Vec<Span> = group.iter().map(|r| r.aspect_span).collect();
        spans.sort();
        spans.dedup();
        for pair in spans.windows(2) {
            if pair[0].overlaps(&pair[1]) {
                return Err(CorpusError::OverlappingSpans {
                    sentence: group[0].sentence(),
                    first: pair[0],
                    second: pair[1],
                });
            }
        }

        let n = group[0].tokens.len();
        let mut tags = vec![Tag::O; n];
        for span in &spans {
            tags[span.start] = Tag::BeginAspect;
            for tag in &mut tags[span.start + 1..=span.end] {
                *tag = Tag::InsideAspect;
            }
        }
        for record in group {
            let mut slots = vec![Slot::Sentinel; n];
            for slot in &mut slots[record.aspect_span.start..=record.aspect_span.end] {
                *slot = Slot::Label(record.polarity);
            }
            out.push(AtepcSentence::new(record.tokens.clone(), tags.clone(), slots)?);
        }
        i = j;
    }
    Ok(out)
}

pub fn serialize_atepc(sentences: &[AtepcSentence]) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for ((token, tag), slot) in s.tokens.iter().zip(&s.tags).zip(&s.slots) {
            out.push_str(token.as_str());
            out.push(' ');
            out.push_str(tag.as_str());
            out.push(' ');
            out.push_str(slot.as_str());
            out.push('\n');
        }
    }
    out
}

pub fn parse_atepc(text: &str) -> Result<Vec<AtepcSentence>, CorpusError> {
    let mut out = Vec::new();
    for (first, lines) in blocks(text) {
        let mut tokens = Vec::with_capacity(lines.len());
        let mut tags = Vec::with_capacity(lines.len());
        let mut slots = Vec::with_capacity(lines.len());
        for (k, line) in lines.iter().enumerate() {
            let line_no = first + k;
            let err = |message: String| CorpusError::Parse { line: line_no, message };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            }
            let tag: Tag = cols[1].parse().map_err(|_| err(format!("unknown tag {:?}", cols[1])))?;
            if tag == Tag::InsideAspect && tags.last().is_none_or(|t| *t == Tag::O) {
                return Err(err("I-ASP does not continue an aspect".into()));
            }
            let slot: Slot = cols[2]
                .parse()
                .map_err(|_| err(format!("unknown polarity slot {:?}", cols[2])))?;
            tokens.push(Token::new(cols[0]).map_err(|e| err(e.to_string()))?);
            tags.push(tag);
            slots.push(slot);
        }
        let sentence = AtepcSentence::new(tokens, tags, slots)
            .map_err(|e| CorpusError::Parse { line: first, message: e.to_string() })?;
        out.push(sentence);
    }
    Ok(out)
}
