use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{FrequencyTable, GeoAspectRecord, GeoError, SpatialBin};
use crate::corpus::Polarity;
use crate::ingest::LatLon;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMode {
    /// One Point per record.
    Points,
    /// One Polygon per grid cell.
    Cells,
}

impl std::str::FromStr for ExportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "points" => Ok(ExportMode::Points),
            "cells" => Ok(ExportMode::Cells),
            other => Err(format!("unknown export mode {other:?} (expected points or cells)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Collection<P> {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature<P>>,
}

#[derive(Serialize, Deserialize)]
struct Feature<P> {
    #[serde(rename = "type")]
    kind: String,
    geometry: Geometry,
    properties: P,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum Geometry {
    Point { coordinates: [f64; 2] },
    Polygon { coordinates: Vec<Vec<[f64; 2]>> },
}

#[derive(Serialize, Deserialize)]
struct PointProps {
    aspect: String,
    polarity: Polarity,
    place_id: String,
    timestamp: i64,
}

#[derive(Serialize, Deserialize)]
struct CellProps {
    bin: String,
    row: i64,
    col: i64,
    cell_size_deg: f64,
    positive: usize,
    negative: usize,
    neutral: usize,
    total: usize,
    aspects: BTreeMap<Polarity, BTreeMap<String, usize>>,
}

fn feature<P>(geometry: Geometry, properties: P) -> Feature<P> {
    Feature { kind: "Feature".into(), geometry, properties }
}

fn render<P: Serialize>(features: Vec<Feature<P>>) -> String {
    let fc = Collection { kind: "FeatureCollection".into(), features };
    let mut out = serde_json::to_string_pretty(&fc).expect("GeoJSON serializes");
    out.push('\n');
    out
}

/// Counter-clockwise exterior ring in (lon, lat) order.
fn cell_ring(bin: &SpatialBin) -> Vec<[f64; 2]> {
    let (sw, ne) = bin.bounds();
    vec![[sw.lon, sw.lat], [ne.lon, sw.lat], [ne.lon, ne.lat], [sw.lon, ne.lat], [sw.lon, sw.lat]]
}

/// Points mode ignores `bins`; cells mode ignores `records`.
pub fn export_geojson(records: &[GeoAspectRecord], bins: &[SpatialBin], mode: ExportMode) -> String {
    match mode {
        ExportMode::Points => render(
            records
                .iter()
                .map(|r| {
                    feature(
                        Geometry::Point { coordinates: [r.location.lon, r.location.lat] },
                        PointProps {
                            aspect: r.aspect.clone(),
                            polarity: r.polarity,
                            place_id: r.place_id.clone(),
                            timestamp: r.timestamp,
                        },
                    )
                })
                .collect(),
        ),
        ExportMode::Cells => render(
            bins.iter()
                .map(|b| {
                    feature(
                        Geometry::Polygon { coordinates: vec![cell_ring(b)] },
                        CellProps {
                            bin: b.id(),
                            row: b.row,
                            col: b.col,
                            cell_size_deg: b.cell_size_deg,
                            positive: b.polarity_count(Polarity::Positive),
                            negative: b.polarity_count(Polarity::Negative),
                            neutral: b.polarity_count(Polarity::Neutral),
                            total: b.total(),
                            aspects: b.counts.clone(),
                        },
                    )
                })
                .collect(),
        ),
    }
}

fn parse_collection<P: DeserializeOwned>(text: &str) -> Result<Vec<Feature<P>>, GeoError> {
    let fc: Collection<P> = serde_json::from_str(text).map_err(|e| GeoError::GeoJson(e.to_string()))?;
    if fc.kind != "FeatureCollection" {
        return Err(GeoError::GeoJson(format!("expected FeatureCollection, found {}", fc.kind)));
    }
    if let Some(f) = fc.features.iter().find(|f| f.kind != "Feature") {
        return Err(GeoError::GeoJson(format!("expected Feature, found {}", f.kind)));
    }
    Ok(fc.features)
}

/// Inverse of points-mode export.
pub fn parse_points(text: &str) -> Result<Vec<GeoAspectRecord>, GeoError> {
    parse_collection::<PointProps>(text)?
        .into_iter()
        .map(|f| match f.geometry {
            Geometry::Point { coordinates: [lon, lat] } => {
                let p = f.properties;
                GeoAspectRecord::new(&p.aspect, p.polarity, LatLon::new(lat, lon), p.place_id, p.timestamp)
            }
            Geometry::Polygon { .. } => Err(GeoError::GeoJson("expected Point geometry".into())),
        })
        .collect()
}

/// Inverse of cells-mode export. The geometry is checked against the
/// row/column properties.
pub fn parse_cells(text: &str) -> Result<Vec<SpatialBin>, GeoError> {
    parse_collection::<CellProps>(text)?
        .into_iter()
        .map(|f| {
            let p = f.properties;
            if !(p.cell_size_deg > 0.0 && p.cell_size_deg.is_finite()) {
                return Err(GeoError::CellSize(p.cell_size_deg));
            }
            let bin = SpatialBin { row: p.row, col: p.col, cell_size_deg: p.cell_size_deg, counts: p.aspects };
            match f.geometry {
                Geometry::Polygon { coordinates } if coordinates == vec![cell_ring(&bin)] => Ok(bin),
                _ => Err(GeoError::GeoJson(format!("geometry of {} does not match its cell", p.bin))),
            }
        })
        .collect()
}

/// `polarity,aspect,count` rows, tables in the given order.
pub fn frequency_csv(tables: &[FrequencyTable]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["polarity", "aspect", "count"]).expect("in-memory write");
    for t in tables {
        for (aspect, count) in &t.entries {
            w.write_record([t.polarity.as_str(), aspect, &count.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}
