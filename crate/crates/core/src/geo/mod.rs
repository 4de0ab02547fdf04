//! Aggregation of aspect predictions over geo-located reviews.

mod export;
mod plot;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Polarity;
use crate::ingest::{LatLon, Review};
use crate::lcf::AspectPrediction;

pub use export::{export_geojson, frequency_csv, parse_cells, parse_points, ExportMode};
pub use plot::frequency_svg;

/// Default grid cell edge in degrees.
pub const DEFAULT_CELL_DEG: f64 = 0.005;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),
    #[error("cell size must be positive and finite, got {0}")]
    CellSize(f64),
}

/// One predicted aspect pinned to the location of its review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoAspectRecord {
    pub aspect: String,
    pub polarity: Polarity,
    pub location: LatLon,
    pub place_id: String,
    pub timestamp: i64,
}

impl GeoAspectRecord {
    /// Lower-cases the aspect term and validates the coordinates.
    pub fn new(
        aspect: &str,
        polarity: Polarity,
        location: LatLon,
        place_id: impl Into<String>,
        timestamp: i64,
    ) -> Result<Self, GeoError> {
        let aspect = normalize_aspect(aspect);
        if aspect.is_empty() {
            return Err(GeoError::InvalidRecord("empty aspect term".into()));
        }
        if !location.is_valid() {
            return Err(GeoError::InvalidRecord(format!(
                "coordinates ({}, {}) out of range",
                location.lat, location.lon
            )));
        }
        Ok(GeoAspectRecord { aspect, polarity, location, place_id: place_id.into(), timestamp })
    }

    pub fn from_prediction(review: &Review, prediction: &AspectPrediction) -> Result<Self, GeoError> {
        Self::new(&prediction.term, prediction.polarity, review.location, &review.place_id, review.timestamp)
    }
}

pub fn normalize_aspect(term: &str) -> String {
    term.trim().to_lowercase()
}

/// Aspect counts of one polarity, descending by count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub polarity: Polarity,
    pub entries: Vec<(String, usize)>,
}

impl FrequencyTable {
    pub fn total(&self) -> usize {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Top-`k` aspects among records of `polarity`. `k == 0` is treated as 1.
pub fn aggregate_frequency(records: &[GeoAspectRecord], polarity: Polarity, k: usize) -> FrequencyTable {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in records.iter().filter(|r| r.polarity == polarity) {
        *counts.entry(normalize_aspect(&r.aspect)).or_default() += 1;
    }
    let mut entries: Vec<(String, usize)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k.max(1));
    FrequencyTable { polarity, entries }
}

/// One regular lat/lon grid cell. Row and column are floor indices of
/// latitude and longitude divided by the cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialBin {
    pub row: i64,
    pub col: i64,
    pub cell_size_deg: f64,
    /// Aspect counts per polarity.
    pub counts: BTreeMap<Polarity, BTreeMap<String, usize>>,
}

impl SpatialBin {
    pub fn id(&self) -> String {
        format!("r{}c{}", self.row, self.col)
    }

    /// South-west and north-east corners.
    pub fn bounds(&self) -> (LatLon, LatLon) {
        let c = self.cell_size_deg;
        (
            LatLon::new(self.row as f64 * c, self.col as f64 * c),
            LatLon::new((self.row + 1) as f64 * c, (self.col + 1) as f64 * c),
        )
    }

    pub fn contains(&self, p: LatLon) -> bool {
        cell_index(p.lat, self.cell_size_deg) == self.row && cell_index(p.lon, self.cell_size_deg) == self.col
    }

    pub fn polarity_count(&self, polarity: Polarity) -> usize {
        self.counts.get(&polarity).map_or(0, |m| m.values().sum())
    }

    pub fn total(&self) -> usize {
        Polarity::ALL.iter().map(|p| self.polarity_count(*p)).sum()
    }
}

/// `floor(x / cell)`, corrected so that the cell `[i*cell, (i+1)*cell)`
/// computed in floating point really contains `x`. A point on a boundary
/// goes to the higher-index cell.
pub fn cell_index(x: f64, cell: f64) -> i64 {
    let mut i = (x / cell).floor() as i64;
    if (i + 1) as f64 * cell <= x {
        i += 1;
    }
    if i as f64 * cell > x {
        i -= 1;
    }
    i
}

/// Assigns every record to exactly one grid cell. Bins come out sorted by
/// (row, col).
pub fn bin_spatial(records: &[GeoAspectRecord], cell_size_deg: f64) -> Result<Vec<SpatialBin>, GeoError> {
    if !(cell_size_deg > 0.0 && cell_size_deg.is_finite()) {
        return Err(GeoError::CellSize(cell_size_deg));
    }
    let mut bins: BTreeMap<(i64, i64), SpatialBin> = BTreeMap::new();
    for r in records {
        let key = (cell_index(r.location.lat, cell_size_deg), cell_index(r.location.lon, cell_size_deg));
        let bin = bins.entry(key).or_insert_with(|| SpatialBin {
            row: key.0,
            col: key.1,
            cell_size_deg,
            counts: BTreeMap::new(),
        });
        *bin.counts.entry(r.polarity).or_default().entry(normalize_aspect(&r.aspect)).or_default() += 1;
    }
    Ok(bins.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(aspect: &str, polarity: Polarity, lat: f64, lon: f64) -> GeoAspectRecord {
        GeoAspectRecord::new(aspect, polarity, LatLon::new(lat, lon), "p", 0).unwrap()
    }

    #[test]
    fn empty_frequency() {
        assert!(aggregate_frequency(&[], Polarity::Positive, 5).is_empty());
    }

    #[test]
    fn counts_one_polarity() {
        let mut rs = vec![rec("trail", Polarity::Positive, 42.0, -71.0); 3];
        rs.push(rec("trash", Polarity::Negative, 42.0, -71.0));
        let t = aggregate_frequency(&rs, Polarity::Positive, 5);
        assert_eq!(t.entries, vec![("trail".to_string(), 3)]);
    }

    #[test]
    fn ties_are_lexicographic() {
        let rs: Vec<_> = ["trail", "parking", "trail", "Parking"]
            .iter()
            .map(|a| rec(a, Polarity::Positive, 0.0, 0.0))
            .collect();
        let t = aggregate_frequency(&rs, Polarity::Positive, 5);
        assert_eq!(t.entries, vec![("parking".to_string(), 2), ("trail".to_string(), 2)]);
        assert_eq!(aggregate_frequency(&rs, Polarity::Positive, 1).entries.len(), 1);
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(GeoAspectRecord::new("x", Polarity::Neutral, LatLon::new(91.0, 0.0), "p", 0).is_err());
        assert!(GeoAspectRecord::new(" ", Polarity::Neutral, LatLon::new(0.0, 0.0), "p", 0).is_err());
    }

    #[test]
    fn nearby_records_share_coarse_cell() {
        let rs = [rec("a", Polarity::Positive, 42.3512, -71.0623), rec("b", Polarity::Positive, 42.3522, -71.0623)];
        assert_eq!(bin_spatial(&rs, 0.01).unwrap().len(), 1);
        assert_eq!(bin_spatial(&rs, 0.0005).unwrap().len(), 2);
    }

    #[test]
    fn boundary_goes_up() {
        assert_eq!(cell_index(0.015, 0.005), 3);
        assert_eq!(cell_index(-0.01, 0.005), -2);
        assert_eq!(cell_index(0.0149999, 0.005), 2);
    }

    #[test]
    fn single_record_bin_contains_it() {
        let r = rec("a", Polarity::Negative, 42.36, -71.05);
        let bins = bin_spatial(std::slice::from_ref(&r), DEFAULT_CELL_DEG).unwrap();
        assert_eq!(bins.len(), 1);
        assert!(bins[0].contains(r.location));
        let (sw, ne) = bins[0].bounds();
        assert!(sw.lat <= r.location.lat && r.location.lat < ne.lat);
        assert!(sw.lon <= r.location.lon && r.location.lon < ne.lon);
        assert_eq!(bins[0].polarity_count(Polarity::Negative), 1);
    }

    #[test]
    fn rejects_nonpositive_cell() {
        assert!(bin_spatial(&[], 0.0).is_err());
        assert!(bin_spatial(&[], f64::NAN).is_err());
    }
}
