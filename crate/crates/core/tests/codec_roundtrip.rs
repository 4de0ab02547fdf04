use proptest::prelude::*;
use urban_absa::corpus::{
    apc_to_atepc, parse_apc, parse_atepc, serialize_apc, serialize_atepc, ApcRecord, AtepcSentence, Polarity, Slot,
    Span, Tag, Token,
};

const APC_SAMPLE: &str = "Nice $T$ for sport activities the area is very clean
playground
Positive

Nice playground for $T$ activities the area is very clean
sport
Positive

Nice playground for sport activities the $T$ is very clean
area
Positive
";

const ATEPC_SAMPLE: &str = "Nice O -999
playground B-ASP Positive
for O -999
sport B-ASP -999
activities O -999
the O -999
area B-ASP -999
is O -999
very O -999
clean O -999

Nice O -999
playground B-ASP -999
for O -999
sport B-ASP Positive
activities O -999
the O -999
area B-ASP -999
is O -999
very O -999
clean O -999

Nice O -999
playground B-ASP -999
for O -999
sport B-ASP -999
activities O -999
the O -999
area B-ASP Positive
is O -999
very O -999
clean O -999
";

#[test]
fn sample_converts_byte_for_byte() {
    let records = parse_apc(APC_SAMPLE).unwrap();
    assert_eq!(serialize_atepc(&apc_to_atepc(&records).unwrap()), ATEPC_SAMPLE);
    assert_eq!(serialize_apc(&records), APC_SAMPLE);
    assert_eq!(serialize_atepc(&parse_atepc(ATEPC_SAMPLE).unwrap()), ATEPC_SAMPLE);
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,8}",
        "[A-Z][a-z]{0,6}",
        Just(",".to_string()),
        Just(".".to_string()),
        Just("-999".to_string()),
        Just("O".to_string()),
    ]
}

fn tokens(max: usize) -> impl Strategy<Value = Vec<Token>> {
    prop::collection::vec(word(), 1..max).prop_map(|ws| ws.into_iter().map(|w| Token::new(w).unwrap()).collect())
}

fn polarity() -> impl Strategy<Value = Polarity> {
    prop::sample::select(Polarity::ALL.to_vec())
}

fn apc_record() -> impl Strategy<Value = ApcRecord> {
    tokens(14).prop_flat_map(|toks| {
        let n = toks.len();
        (Just(toks), 0..n, polarity()).prop_flat_map(move |(toks, s, p)| {
            (s..n).prop_map(move |e| ApcRecord::new(toks.clone(), Span::new(s, e), p).unwrap())
        })
    })
}

/// Sentence with non-overlapping aspect spans, one of them focused.
fn atepc_sentence() -> impl Strategy<Value = AtepcSentence> {
    (tokens(16), prop::collection::vec(any::<bool>(), 16), any::<prop::sample::Index>(), polarity()).prop_map(
        |(toks, cuts, pick, p)| {
            let n = toks.len();
            let mut spans = Vec::new();
            let mut i = 0;
            while i < n {
                let len = 1 + usize::from(cuts[i] && i + 1 < n);
                if cuts[(i + 3) % 16] || spans.is_empty() && i + len >= n {
                    spans.push(Span::new(i, i + len - 1));
                }
                i += len + 1;
            }
            if spans.is_empty() {
                spans.push(Span::single(0));
            }
            let focus = spans[pick.index(spans.len())];
            let mut tags = vec![Tag::O; n];
            let mut slots = vec![Slot::Sentinel; n];
            for s in &spans {
                tags[s.start] = Tag::BeginAspect;
                for t in &mut tags[s.start + 1..=s.end] {
                    *t = Tag::InsideAspect;
                }
            }
            for slot in &mut slots[focus.start..=focus.end] {
                *slot = Slot::Label(p);
            }
            AtepcSentence::new(toks, tags, slots).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn apc_round_trip(records in prop::collection::vec(apc_record(), 0..6)) {
        let text = serialize_apc(&records);
        let back = parse_apc(&text).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(serialize_apc(&back), text);
    }

    #[test]
    fn atepc_round_trip(sentences in prop::collection::vec(atepc_sentence(), 0..6)) {
        let text = serialize_atepc(&sentences);
        let back = parse_atepc(&text).unwrap();
        prop_assert_eq!(&back, &sentences);
        prop_assert_eq!(serialize_atepc(&back), text);
    }

    #[test]
    fn conversion_keeps_one_copy_per_record(records in prop::collection::vec(apc_record(), 1..6)) {
        // single-record groups cannot overlap
        let mut distinct = records.clone();
        distinct.dedup_by(|a, b| a.tokens == b.tokens);
        let converted = apc_to_atepc(&distinct).unwrap();
        prop_assert_eq!(converted.len(), distinct.len());
        for (s, r) in converted.iter().zip(&distinct) {
            prop_assert_eq!(s.focused(), Some((r.aspect_span, r.polarity)));
        }
    }
}
