use crate::corpus::{Span, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BioDecoding {
    pub spans: Vec<Span>,
    /// Number of I-ASP tags that started a span and were read as B-ASP.
    pub repairs: usize,
}

/// Maximal aspect spans of a possibly ill-formed tag sequence. An I-ASP at
/// the start or after O opens a new span and is counted as a repair.
pub fn decode_bio(tags: &[Tag]) -> BioDecoding {
    let mut out = BioDecoding::default();
    let mut open: Option<usize> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => {
                if let Some(s) = open.take() {
                    out.spans.push(Span::new(s, i - 1));
                }
            }
            Tag::BeginAspect => {
                if let Some(s) = open.replace(i) {
                    out.spans.push(Span::new(s, i - 1));
                }
            }
            Tag::InsideAspect => {
                if open.is_none() {
                    out.repairs += 1;
                    open = Some(i);
                }
            }
        }
    }
    if let Some(s) = open {
        out.spans.push(Span::new(s, tags.len() - 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Tag::{BeginAspect as B, InsideAspect as I, O};

    #[test]
    fn decoding_examples() {
        assert_eq!(decode_bio(&[O, B, O]).spans, vec![Span::single(1)]);
        assert_eq!(decode_bio(&[B, I, O, B]).spans, vec![Span::new(0, 1), Span::single(3)]);
        let repaired = decode_bio(&[I, O]);
        assert_eq!(repaired.spans, vec![Span::single(0)]);
        assert_eq!(repaired.repairs, 1);
    }

    #[test]
    fn well_formed_sequences_need_no_repair() {
        let d = decode_bio(&[B, I, I, B, O, O, B]);
        assert_eq!(d.repairs, 0);
        assert_eq!(d.spans, vec![Span::new(0, 2), Span::single(3), Span::single(6)]);
        assert!(decode_bio(&[]).spans.is_empty());
    }

    #[test]
    fn repair_after_outside() {
        let d = decode_bio(&[B, O, I, I]);
        assert_eq!(d.spans, vec![Span::single(0), Span::new(2, 3)]);
        assert_eq!(d.repairs, 1);
    }
}
