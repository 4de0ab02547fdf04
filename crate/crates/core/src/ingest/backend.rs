use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use super::response::{parse_details, parse_nearby, RawReview};
use super::{IngestError, LatLon, Place};

/// Source of nearby-search and place-details responses.
pub trait PlacesBackend {
    /// All places returned for one query circle, across result pages.
    fn nearby(&self, center: LatLon, radius_m: f64, category: &str) -> Result<Vec<Place>, IngestError>;

    /// Reviews of one place in the order the backend returns them.
    fn details(&self, place_id: &str) -> Result<Vec<RawReview>, IngestError>;
}

/// Stable fixture file stem for a query center.
pub fn center_key(center: LatLon) -> String {
    let digest = Sha256::digest(format!("{:.6},{:.6}", center.lat, center.lon).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Canned responses on disk: `nearby/<center-key>.json` and
/// `details/<place_id>.json`. A center without a file has no places.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    root: PathBuf,
}

impl FixtureBackend {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(IngestError::Backend(format!("fixture directory {} not found", root.display())));
        }
        Ok(FixtureBackend { root })
    }

    pub fn nearby_path(root: &Path, center: LatLon) -> PathBuf {
        root.join("nearby").join(format!("{}.json", center_key(center)))
    }

    pub fn details_path(root: &Path, place_id: &str) -> PathBuf {
        root.join("details").join(format!("{place_id}.json"))
    }
}

impl PlacesBackend for FixtureBackend {
    fn nearby(&self, center: LatLon, _radius_m: f64, _category: &str) -> Result<Vec<Place>, IngestError> {
        let path = Self::nearby_path(&self.root, center);
        if !path.exists() {
            tracing::debug!(path = %path.display(), "no fixture for query center");
            return Ok(Vec::new());
        }
        let body = std::fs::read_to_string(&path)?;
        Ok(parse_nearby(&body)?.places)
    }

    fn details(&self, place_id: &str) -> Result<Vec<RawReview>, IngestError> {
        let path = Self::details_path(&self.root, place_id);
        if !path.exists() {
            return Err(IngestError::NotFound(place_id.to_owned()));
        }
        let body = std::fs::read_to_string(&path)?;
        parse_details(&body)?.ok_or_else(|| IngestError::NotFound(place_id.to_owned()))
    }
}

/// Token bucket limiting request starts to `rate` per second.
#[derive(Debug)]
pub struct RateLimiter {
    rate: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(rate_per_sec: f64) -> Self {
        let rate = rate_per_sec.max(f64::MIN_POSITIVE);
        RateLimiter { rate, state: Mutex::new((rate.max(1.0), Instant::now())) }
    }

    /// Blocks until one token is available and consumes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.rate).min(self.rate.max(1.0));
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / self.rate)
            };
            thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub api_key: String,
    pub base_url: String,
    pub requests_per_sec: f64,
    pub max_attempts: u32,
    pub retry_backoff: Duration,
    /// Delay before a next-page token becomes valid on the service side.
    pub page_token_delay: Duration,
    pub max_pages: usize,
}

impl LiveConfig {
    pub const API_KEY_VAR: &'static str = "PLACES_API_KEY";
    pub const DEFAULT_BASE_URL: &'static str = "https://maps.googleapis.com/maps/api/place";

    pub fn new(api_key: impl Into<String>) -> Self {
        LiveConfig {
            api_key: api_key.into(),
            base_url: Self::DEFAULT_BASE_URL.into(),
            requests_per_sec: 10.0,
            max_attempts: 3,
            retry_backoff: Duration::from_millis(500),
            page_token_delay: Duration::from_secs(2),
            max_pages: 3,
        }
    }

    /// Reads the key from `PLACES_API_KEY`.
    pub fn from_env() -> Result<Self, IngestError> {
        match std::env::var(Self::API_KEY_VAR) {
            Ok(key) if !key.trim().is_empty() => Ok(Self::new(key.trim())),
            _ => Err(IngestError::MissingApiKey(Self::API_KEY_VAR)),
        }
    }
}

/// HTTP backend against the places web service.
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, IngestError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| IngestError::Backend(e.to_string()))?;
        let limiter = RateLimiter::new(config.requests_per_sec);
        Ok(LiveBackend { config, client, limiter })
    }

    fn get(&self, endpoint: &str, params: &[(&str, String)]) -> Result<String, IngestError> {
        let url = format!("{}/{endpoint}/json", self.config.base_url.trim_end_matches('/'));
        let mut backoff = self.config.retry_backoff;
        let mut last_error = String::new();
        for attempt in 1..=self.config.max_attempts.max(1) {
            self.limiter.acquire();
            let result = self
                .client
                .get(&url)
                .query(params)
                .query(&[("key", self.config.api_key.as_str())])
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.text());
            match result {
                Ok(body) => return Ok(body),
                Err(e) => {
                    last_error = e.without_url().to_string();
                    tracing::warn!(attempt, endpoint, error = %last_error, "request failed");
                    if attempt < self.config.max_attempts {
                        thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(IngestError::Transport { attempts: self.config.max_attempts.max(1), message: last_error })
    }
}

impl PlacesBackend for LiveBackend {
    fn nearby(&self, center: LatLon, radius_m: f64, category: &str) -> Result<Vec<Place>, IngestError> {
        let mut places = Vec::new();
        let mut token: Option<String> = None;
        for page in 0..self.config.max_pages.max(1) {
            let params = match &token {
                Some(t) => {
                    thread::sleep(self.config.page_token_delay);
                    vec![("pagetoken", t.clone())]
                }
                None => vec![
                    ("location", format!("{},{}", center.lat, center.lon)),
                    ("radius", format!("{radius_m}")),
                    ("type", category.to_owned()),
                ],
            };
            let parsed = parse_nearby(&self.get("nearbysearch", &params)?)?;
            places.extend(parsed.places);
            tracing::debug!(page, total = places.len(), "nearby page");
            match parsed.next_page_token {
                Some(t) => token = Some(t),
                None => break,
            }
        }
        Ok(places)
    }

    fn details(&self, place_id: &str) -> Result<Vec<RawReview>, IngestError> {
        let params = [("place_id", place_id.to_owned()), ("fields", "place_id,name,reviews".to_owned())];
        parse_details(&self.get("details", &params)?)?.ok_or_else(|| IngestError::NotFound(place_id.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_key_is_stable_and_distinct() {
        let a = center_key(LatLon::new(42.36, -71.06));
        assert_eq!(a.len(), 16);
        assert_eq!(a, center_key(LatLon::new(42.36, -71.06)));
        assert_ne!(a, center_key(LatLon::new(42.361, -71.06)));
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(50.0);
        let start = Instant::now();
        for _ in 0..60 {
            limiter.acquire();
        }
        // 50 burst tokens, the remaining 10 need ~0.2 s
        assert!(start.elapsed() >= Duration::from_millis(150));
    }
}
