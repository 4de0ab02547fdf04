//! Decoding of nearby-search and place-details payloads. Fixtures use the
//! same JSON shape as the live service.

use serde_json::{Map, Value};

use super::{IngestError, LatLon, Place};

/// A review as returned by the details endpoint, before it is tied to a place.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReview {
    pub author: String,
    pub language: String,
    pub rating: u8,
    pub text: String,
    pub timestamp: i64,
}

pub struct NearbyPage {
    pub places: Vec<Place>,
    pub next_page_token: Option<String>,
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, IngestError> {
    obj.get(key)
        .ok_or_else(|| IngestError::parse(format!("{path}.{key}"), "missing"))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, IngestError> {
    v.as_object().ok_or_else(|| IngestError::parse(path, "expected an object"))
}

fn str_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, IngestError> {
    field(obj, key, path)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| IngestError::parse(format!("{path}.{key}"), "expected a string"))
}

fn f64_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<f64, IngestError> {
    field(obj, key, path)?
        .as_f64()
        .ok_or_else(|| IngestError::parse(format!("{path}.{key}"), "expected a number"))
}

fn status(root: &Map<String, Value>) -> Option<&str> {
    root.get("status").and_then(Value::as_str)
}

fn check_status(root: &Map<String, Value>, ok: &[&str]) -> Result<(), IngestError> {
    match status(root) {
        None => Ok(()),
        Some(s) if ok.contains(&s) => Ok(()),
        Some("OVER_QUERY_LIMIT") => Err(IngestError::Transport {
            attempts: 1,
            message: "over query limit".into(),
        }),
        Some(s) => {
            let detail = root.get("error_message").and_then(Value::as_str).unwrap_or("");
            Err(IngestError::Backend(format!("status {s} {detail}").trim().to_string()))
        }
    }
}

pub fn parse_nearby(body: &str) -> Result<NearbyPage, IngestError> {
    let root: Value = serde_json::from_str(body).map_err(|e| IngestError::parse("$", e.to_string()))?;
    let root = as_object(&root, "$")?;
    check_status(root, &["OK", "ZERO_RESULTS"])?;
    let results = match root.get("results") {
        None => &[][..],
        Some(v) => v
            .as_array()
            .ok_or_else(|| IngestError::parse("results", "expected an array"))?
            .as_slice(),
    };
    let mut places = Vec::with_capacity(results.len());
    for (i, item) in results.iter().enumerate() {
        let path = format!("results[{i}]");
        let obj = as_object(item, &path)?;
        let place_id = str_field(obj, "place_id", &path)?;
        if place_id.is_empty() {
            return Err(IngestError::parse(format!("{path}.place_id"), "empty"));
        }
        let geometry = as_object(field(obj, "geometry", &path)?, &format!("{path}.geometry"))?;
        let loc_path = format!("{path}.geometry.location");
        let loc = as_object(field(geometry, "location", &format!("{path}.geometry"))?, &loc_path)?;
        let location = LatLon::new(f64_field(loc, "lat", &loc_path)?, f64_field(loc, "lng", &loc_path)?);
        let rating = match obj.get("rating") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_f64()
                    .ok_or_else(|| IngestError::parse(format!("{path}.rating"), "expected a number"))?,
            ),
        };
        let total_user_ratings = match obj.get("user_ratings_total") {
            None | Some(Value::Null) => 0,
            Some(v) => v.as_u64().ok_or_else(|| {
                IngestError::parse(format!("{path}.user_ratings_total"), "expected a non-negative integer")
            })?,
        };
        let place = Place {
            place_id,
            name: obj.get("name").and_then(Value::as_str).unwrap_or_default().to_owned(),
            location,
            rating,
            total_user_ratings,
        };
        place.validate().map_err(|e| IngestError::parse(path.clone(), e.to_string()))?;
        places.push(place);
    }
    let next_page_token = root
        .get("next_page_token")
        .and_then(Value::as_str)
        .filter(|t| !t.is_empty())
        .map(str::to_owned);
    Ok(NearbyPage { places, next_page_token })
}

/// Reviews in response order. `Ok(None)` means the place is unknown.
pub fn parse_details(body: &str) -> Result<Option<Vec<RawReview>>, IngestError> {
    let root: Value = serde_json::from_str(body).map_err(|e| IngestError::parse("$", e.to_string()))?;
    let root = as_object(&root, "$")?;
    if matches!(status(root), Some("NOT_FOUND") | Some("INVALID_REQUEST")) {
        return Ok(None);
    }
    check_status(root, &["OK"])?;
    let result = as_object(field(root, "result", "$")?, "result")?;
    let reviews = match result.get("reviews") {
        None => return Ok(Some(Vec::new())),
        Some(v) => v
            .as_array()
            .ok_or_else(|| IngestError::parse("result.reviews", "expected an array"))?,
    };
    let mut out = Vec::with_capacity(reviews.len());
    for (i, item) in reviews.iter().enumerate() {
        let path = format!("result.reviews[{i}]");
        let obj = as_object(item, &path)?;
        let rating = field(obj, "rating", &path)?
            .as_u64()
            .filter(|r| (1..=5).contains(r))
            .ok_or_else(|| IngestError::parse(format!("{path}.rating"), "expected an integer in [1, 5]"))?;
        let timestamp = field(obj, "time", &path)?
            .as_i64()
            .filter(|t| *t > 0)
            .ok_or_else(|| IngestError::parse(format!("{path}.time"), "expected a positive integer"))?;
        out.push(RawReview {
            author: obj.get("author_name").and_then(Value::as_str).unwrap_or_default().to_owned(),
            language: obj.get("language").and_then(Value::as_str).unwrap_or_default().to_owned(),
            rating: rating as u8,
            text: str_field(obj, "text", &path)?,
            timestamp,
        });
    }
    Ok(Some(out))
}
