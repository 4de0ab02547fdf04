use serde::{Deserialize, Serialize};

use super::IngestError;

/// WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub place_id: String,
    pub name: String,
    pub location: LatLon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    pub total_user_ratings: u64,
}

impl Place {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.place_id.is_empty() {
            return Err(IngestError::invalid("place_id", "empty place id"));
        }
        if !self.location.is_valid() {
            return Err(IngestError::invalid(
                "location",
                format!("({}, {}) outside WGS84 bounds", self.location.lat, self.location.lon),
            ));
        }
        if let Some(r) = self.rating {
            if !(1.0..=5.0).contains(&r) {
                return Err(IngestError::invalid("rating", format!("{r} outside [1, 5]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub place_id: String,
    pub text: String,
    pub author: String,
    pub language: String,
    pub rating: u8,
    pub timestamp: i64,
    pub location: LatLon,
}

impl Review {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.text.trim().is_empty() {
            return Err(IngestError::invalid("text", "empty review text"));
        }
        if !(1..=5).contains(&self.rating) {
            return Err(IngestError::invalid("rating", format!("{} outside [1, 5]", self.rating)));
        }
        if self.timestamp <= 0 {
            return Err(IngestError::invalid("time", format!("non-positive timestamp {}", self.timestamp)));
        }
        Ok(())
    }
}

/// Regular lattice of nearby-search queries around an origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGrid {
    pub origin: LatLon,
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub radius_m: f64,
    pub category: String,
}

impl QueryGrid {
    pub const DEFAULT_SPACING_M: f64 = 1000.0;
    pub const DEFAULT_RADIUS_M: f64 = 750.0;

    pub fn new(origin: LatLon, rows: usize, cols: usize) -> Self {
        QueryGrid {
            origin,
            rows,
            cols,
            spacing_m: Self::DEFAULT_SPACING_M,
            radius_m: Self::DEFAULT_RADIUS_M,
            category: "park".into(),
        }
    }

    /// Circles smaller than half the spacing leave holes between queries.
    pub fn covers_without_gaps(&self) -> bool {
        self.radius_m >= self.spacing_m / 2.0
    }
}
