//! POI collection: a grid of nearby-search queries, then up to five reviews
//! per discovered place.

mod backend;
mod grid;
mod response;
mod types;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use backend::{center_key, FixtureBackend, LiveBackend, LiveConfig, PlacesBackend, RateLimiter};
pub use grid::{plan_grid, EARTH_RADIUS_M};
pub use response::{parse_details, parse_nearby, NearbyPage, RawReview};
pub use types::{LatLon, Place, QueryGrid, Review};

/// Reviews kept per place.
pub const REVIEWS_PER_PLACE: usize = 5;

pub const PLACES_FILE: &str = "places.jsonl";
pub const REVIEWS_FILE: &str = "reviews.jsonl";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid query grid: {0}")]
    InvalidGrid(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed response at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("unknown place id {0:?}")]
    NotFound(String),
    #[error("environment variable {0} is not set")]
    MissingApiKey(&'static str),
    #[error("backend error: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Parse { field: field.into(), message: message.into() }
    }

    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        IngestError::parse(field, message)
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, IngestError::Transport { .. })
    }
}

/// Adds `place` to `acc`, keeping the copy with more user ratings when the id
/// is already present.
fn merge_place(acc: &mut BTreeMap<String, Place>, place: Place) {
    match acc.get_mut(&place.place_id) {
        Some(existing) => {
            if place.total_user_ratings > existing.total_user_ratings {
                *existing = place;
            }
        }
        None => {
            acc.insert(place.place_id.clone(), place);
        }
    }
}

/// Places around one center, deduplicated on place id and sorted by it.
pub fn nearby_search(
    center: LatLon,
    radius_m: f64,
    category: &str,
    backend: &dyn PlacesBackend,
) -> Result<Vec<Place>, IngestError> {
    let mut acc = BTreeMap::new();
    for place in backend.nearby(center, radius_m, category)? {
        merge_place(&mut acc, place);
    }
    Ok(acc.into_values().collect())
}

/// The first five non-empty reviews of `place`, in backend order, stamped
/// with the place location.
pub fn fetch_reviews(place: &Place, backend: &dyn PlacesBackend) -> Result<Vec<Review>, IngestError> {
    let raw = backend.details(&place.place_id)?;
    let reviews = raw
        .into_iter()
        .filter(|r| !r.text.trim().is_empty())
        .take(REVIEWS_PER_PLACE)
        .map(|r| Review {
            place_id: place.place_id.clone(),
            text: r.text,
            author: r.author,
            language: r.language,
            rating: r.rating,
            timestamp: r.timestamp,
            location: place.location,
        })
        .collect::<Vec<_>>();
    for r in &reviews {
        r.validate()?;
    }
    Ok(reviews)
}

/// Result of a collection run, ordered by place id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Collection {
    pub places: Vec<Place>,
    pub reviews: Vec<Review>,
}

/// Runs every grid query, merges places across overlapping circles, then
/// fetches reviews for each place.
pub fn collect(grid: &QueryGrid, backend: &dyn PlacesBackend) -> Result<Collection, IngestError> {
    let centers = plan_grid(grid)?;
    let mut acc = BTreeMap::new();
    for (i, center) in centers.iter().enumerate() {
        let found = backend.nearby(*center, grid.radius_m, &grid.category)?;
        tracing::debug!(query = i, found = found.len(), "nearby search");
        for place in found {
            merge_place(&mut acc, place);
        }
    }
    let places: Vec<Place> = acc.into_values().collect();
    let mut reviews = Vec::new();
    for place in &places {
        reviews.extend(fetch_reviews(place, backend)?);
    }
    tracing::info!(places = places.len(), reviews = reviews.len(), "collection finished");
    Ok(Collection { places, reviews })
}

impl Collection {
    /// Writes `places.jsonl` and `reviews.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(PLACES_FILE), &self.places)?;
        write_jsonl(&dir.join(REVIEWS_FILE), &self.reviews)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, IngestError> {
        Ok(Collection {
            places: read_jsonl(&dir.join(PLACES_FILE))?,
            reviews: read_jsonl(&dir.join(REVIEWS_FILE))?,
        })
    }
}

/// One JSON object per line, LF endings.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IngestError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IngestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            IngestError::parse(format!("{}:{}", path.display(), i + 1), e.to_string())
        })?;
        out.push(item);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct MapBackend {
        nearby: Vec<Vec<Place>>,
        details: HashMap<String, Vec<RawReview>>,
    }

    impl PlacesBackend for MapBackend {
        fn nearby(&self, center: LatLon, _: f64, _: &str) -> Result<Vec<Place>, IngestError> {
            // centers are encoded by their longitude offset for this double
            let idx = ((center.lon + 71.06) * 1e6).round().abs() as usize % self.nearby.len().max(1);
            Ok(self.nearby.get(idx).cloned().unwrap_or_default())
        }

        fn details(&self, place_id: &str) -> Result<Vec<RawReview>, IngestError> {
            self.details.get(place_id).cloned().ok_or_else(|| IngestError::NotFound(place_id.into()))
        }
    }

    fn place(id: &str, total: u64) -> Place {
        Place {
            place_id: id.into(),
            name: format!("{id} park"),
            location: LatLon::new(42.3, -71.1),
            rating: Some(4.5),
            total_user_ratings: total,
        }
    }

    fn raw(text: &str) -> RawReview {
        RawReview { author: "a".into(), language: "en".into(), rating: 4, text: text.into(), timestamp: 1_600_000_000 }
    }

    #[test]
    fn dedup_keeps_max_ratings() {
        let backend = MapBackend {
            nearby: vec![vec![place("b", 3), place("a", 1), place("b", 10), place("c", 0)]],
            details: HashMap::new(),
        };
        let got = nearby_search(LatLon::new(42.36, -71.06), 500.0, "park", &backend).unwrap();
        let ids: Vec<&str> = got.iter().map(|p| p.place_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(got[1].total_user_ratings, 10);
    }

    #[test]
    fn reviews_truncated_and_stamped() {
        let p = place("a", 1);
        let details = HashMap::from([("a".to_string(), (0..7).map(|i| raw(&format!("review {i}"))).collect())]);
        let backend = MapBackend { nearby: vec![], details };
        let got = fetch_reviews(&p, &backend).unwrap();
        assert_eq!(got.len(), 5);
        assert_eq!(got[0].text, "review 0");
        assert_eq!(got[4].text, "review 4");
        assert!(got.iter().all(|r| r.location == p.location && r.place_id == "a"));
    }

    #[test]
    fn unknown_place_is_not_found() {
        let backend = MapBackend { nearby: vec![], details: HashMap::new() };
        assert!(matches!(fetch_reviews(&place("zz", 0), &backend), Err(IngestError::NotFound(_))));
    }

    #[test]
    fn empty_review_text_is_skipped() {
        let details = HashMap::from([("a".to_string(), vec![raw("  "), raw("ok")])]);
        let backend = MapBackend { nearby: vec![], details };
        let got = fetch_reviews(&place("a", 1), &backend).unwrap();
        assert_eq!(got.len(), 1);
    }
}
