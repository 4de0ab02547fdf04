//! Synthetic annotated corpus and places fixtures for tests, demos and
//! benchmarking without network access or hand-labelled data.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{apc_to_atepc, tokens_from, ApcRecord, AtepcSentence, CorpusError, Polarity, Span, Token};
use crate::ingest::{plan_grid, FixtureBackend, IngestError, LatLon, QueryGrid};
use crate::lcf::srd;

/// Urban aspect terms, some of them multi-word.
pub const LEXICON: [&str; 30] = [
    "trail", "playground", "trash", "parking", "benches", "restrooms", "grass", "trees", "lake", "view",
    "dog park", "picnic area", "staff", "fountain", "lighting", "paths", "field", "basketball court", "pool",
    "garden", "flowers", "birds", "shade", "bike lane", "sidewalk", "swings", "tennis courts", "entrance",
    "signage", "water",
];

const POSITIVE: [&str; 12] = [
    "great", "clean", "beautiful", "lovely", "amazing", "nice", "wonderful", "excellent", "well-kept",
    "peaceful", "fantastic", "pleasant",
];
const NEGATIVE: [&str; 12] = [
    "dirty", "broken", "terrible", "awful", "filthy", "dangerous", "smelly", "poor", "disgusting", "horrible",
    "neglected", "unsafe",
];
const NEUTRAL: [&str; 10] = [
    "okay", "average", "ordinary", "standard", "typical", "adequate", "basic", "acceptable", "normal", "so-so",
];

const CONNECTORS: [&[&str]; 5] = [&[",", "but"], &[",", "and"], &[".", "also", ","], &[";", "however"], &[",", "while"]];
const PREFIXES: [&[&str]; 5] = [
    &["we", "visited", "last", "weekend", "."],
    &["came", "here", "with", "my", "kids", "."],
    &["stopped", "by", "on", "sunday", ","],
    &["first", "time", "here", "."],
    &["honestly", ","],
];
const SUFFIXES: [&[&str]; 3] = [&[".", "we", "stayed", "an", "hour"], &["overall", "."], &["."]];

/// Threshold the generator keeps cue words apart by: a clause's own cue is
/// within this SRD of its aspect, every other cue beyond it.
pub const CUE_SRD: usize = 3;

pub fn cues(polarity: Polarity) -> &'static [&'static str] {
    match polarity {
        Polarity::Positive => &POSITIVE,
        Polarity::Negative => &NEGATIVE,
        Polarity::Neutral => &NEUTRAL,
    }
}

/// One generated sentence with every aspect labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSentence {
    pub tokens: Vec<Token>,
    pub aspects: Vec<(Span, Polarity)>,
    /// Position of the cue word of each aspect.
    pub cues: Vec<usize>,
}

impl SynthSentence {
    pub fn text(&self) -> String {
        detokenize(&self.tokens)
    }

    pub fn apc_records(&self) -> Vec<ApcRecord> {
        self.aspects
            .iter()
            .map(|(span, p)| ApcRecord { tokens: self.tokens.clone(), aspect_span: *span, polarity: *p })
            .collect()
    }

    /// Own cue inside the SRD window, all others outside.
    fn separable(&self) -> bool {
        self.aspects.iter().enumerate().all(|(i, (span, _))| {
            self.cues
                .iter()
                .enumerate()
                .all(|(j, &c)| (srd(c, *span) <= CUE_SRD) == (i == j))
        })
    }
}

/// Joins tokens with spaces, without a space before closing punctuation.
pub fn detokenize<T: AsRef<str>>(tokens: &[T]) -> String {
    let mut out = String::new();
    for t in tokens {
        let t = t.as_ref();
        if !out.is_empty() && !matches!(t, "," | "." | "!" | "?" | ";" | ":") {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

fn put(words: &mut Vec<String>, ws: &[&str]) {
    words.extend(ws.iter().map(|w| w.to_string()));
}

fn push_clause(rng: &mut ChaCha8Rng, words: &mut Vec<String>, aspect: &str, cue: &str) -> (Span, usize) {
    let aspect_words: Vec<&str> = aspect.split(' ').collect();
    let template = rng.random_range(0..5);
    let start;
    let cue_at;
    match template {
        0 | 1 => {
            put(words, &["the"]);
            start = words.len();
            put(words, &aspect_words);
            put(words, &[if template == 0 { "is" } else { "was" }]);
            cue_at = words.len();
            put(words, &[cue]);
        }
        2 => {
            cue_at = words.len();
            put(words, &[cue]);
            start = words.len();
            put(words, &aspect_words);
        }
        3 => {
            put(words, &["the"]);
            start = words.len();
            put(words, &aspect_words);
            put(words, &["looked", "really"]);
            cue_at = words.len();
            put(words, &[cue]);
        }
        _ => {
            put(words, &["i", "found", "the"]);
            start = words.len();
            put(words, &aspect_words);
            cue_at = words.len();
            put(words, &[cue]);
        }
    }
    (Span::new(start, start + aspect_words.len() - 1), cue_at)
}

fn sentence(rng: &mut ChaCha8Rng) -> SynthSentence {
    let clauses = match rng.random_range(0..20) {
        0..=7 => 1,
        8..=16 => 2,
        _ => 3,
    };
    let mut words = Vec::new();
    if rng.random_bool(0.3) {
        words.extend(PREFIXES.choose(rng).expect("non-empty").iter().map(|w| w.to_string()));
    }
    let terms: Vec<&str> = LEXICON.choose_multiple(rng, clauses).copied().collect();
    let mut aspects = Vec::new();
    let mut cue_positions = Vec::new();
    for (k, term) in terms.iter().enumerate() {
        if k > 0 {
            words.extend(CONNECTORS.choose(rng).expect("non-empty").iter().map(|w| w.to_string()));
        }
        let polarity = Polarity::ALL[rng.random_range(0..3)];
        let cue = cues(polarity).choose(rng).expect("non-empty");
        let (span, cue_at) = push_clause(rng, &mut words, term, cue);
        aspects.push((span, polarity));
        cue_positions.push(cue_at);
    }
    if rng.random_bool(0.2) {
        words.extend(SUFFIXES.choose(rng).expect("non-empty").iter().map(|w| w.to_string()));
    }
    SynthSentence { tokens: tokens_from(&words).expect("generated words are valid tokens"), aspects, cues: cue_positions }
}

/// `n` distinct sentences from clause templates. Each clause pairs one
/// lexicon term with a cue word of a random polarity, so sentences with
/// several clauses usually mix polarities.
pub fn generate_sentences(n: usize, seed: u64) -> Vec<SynthSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = sentence(&mut rng);
        if s.separable() && seen.insert(s.text()) {
            out.push(s);
        }
    }
    out
}

/// Per-aspect records, copies of one sentence kept adjacent.
pub fn synthetic_apc(n: usize, seed: u64) -> Vec<ApcRecord> {
    generate_sentences(n, seed).iter().flat_map(SynthSentence::apc_records).collect()
}

/// The synthetic corpus in training form: one copy per aspect.
pub fn synthetic_corpus(n: usize, seed: u64) -> Result<Vec<AtepcSentence>, CorpusError> {
    apc_to_atepc(&synthetic_apc(n, seed))
}

/// What `write_fixtures` produced.
#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub grid: QueryGrid,
    pub places: usize,
    /// Reviews a collection run keeps (five per place).
    pub reviews: usize,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Writes nearby and details responses for `places` parks spread over a
/// 10x10 query grid around central Boston. Every place has at least five
/// non-empty reviews; every tenth has seven raw reviews, one of them blank,
/// and every fourth is also returned by the neighbouring query circle.
pub fn write_fixtures(dir: &Path, places: usize, seed: u64) -> Result<FixtureSummary, IngestError> {
    let grid = QueryGrid::new(LatLon::new(42.3601, -71.0589), 10, 10);
    let centers = plan_grid(&grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_counts: Vec<usize> = (0..places).map(|i| if i % 10 == 0 { 7 } else { 5 }).collect();
    let needed: usize = raw_counts.iter().map(|c| c - usize::from(*c > 5)).sum();
    let mut texts = generate_sentences(needed, seed ^ 0x00f1_c7e5).into_iter();

    let mut results: Vec<Vec<serde_json::Value>> = vec![Vec::new(); centers.len()];
    std::fs::create_dir_all(dir.join("details"))?;
    std::fs::create_dir_all(dir.join("nearby"))?;
    for (i, raw) in raw_counts.iter().enumerate() {
        let place_id = format!("synth-{i:04}");
        let home = i % centers.len();
        let c = centers[home];
        let lat = round6(c.lat + rng.random_range(-0.002..0.002));
        let lon = round6(c.lon + rng.random_range(-0.002..0.002));
        let ratings_total = rng.random_range(5..500u64);
        let entry = |total: u64| {
            json!({
                "place_id": place_id,
                "name": format!("Park {i}"),
                "geometry": {"location": {"lat": lat, "lng": lon}},
                "rating": round6(rng_free_rating(i)),
                "user_ratings_total": total,
            })
        };
        results[home].push(entry(ratings_total));
        if i % 4 == 0 {
            results[(home + 1) % centers.len()].push(entry(ratings_total - 1));
        }

        let mut reviews = Vec::new();
        for k in 0..*raw {
            let (text, rating) = if *raw > 5 && k == 2 {
                (String::new(), 3)
            } else {
                let s = texts.next().expect("enough sentences generated");
                (s.text(), rating_of(&s))
            };
            reviews.push(json!({
                "author_name": format!("visitor {}", rng.random_range(0..10_000)),
                "language": "en",
                "rating": rating,
                "text": text,
                "time": 1_600_000_000i64 + rng.random_range(0..100_000_000i64),
            }));
        }
        let details = json!({"status": "OK", "result": {"place_id": place_id, "reviews": reviews}});
        write_json(&FixtureBackend::details_path(dir, &place_id), &details)?;
    }
    for (center, found) in centers.iter().zip(results) {
        if found.is_empty() {
            continue;
        }
        let body = json!({"status": "OK", "results": found});
        write_json(&FixtureBackend::nearby_path(dir, *center), &body)?;
    }
    Ok(FixtureSummary { grid, places, reviews: places * crate::ingest::REVIEWS_PER_PLACE })
}

fn rng_free_rating(i: usize) -> f64 {
    3.0 + (i % 21) as f64 / 10.0
}

/// Star rating implied by the balance of positive and negative aspects.
fn rating_of(s: &SynthSentence) -> u8 {
    let score: i32 = s
        .aspects
        .iter()
        .map(|(_, p)| match p {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
            Polarity::Neutral => 0,
        })
        .sum();
    (3 + score).clamp(1, 5) as u8
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), IngestError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
