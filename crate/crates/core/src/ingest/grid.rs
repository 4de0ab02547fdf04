use super::{IngestError, LatLon, QueryGrid};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Query centers of `grid`, row-major from the south-west corner, laid out on
/// a local equirectangular projection centered on the origin.
pub fn plan_grid(grid: &QueryGrid) -> Result<Vec<LatLon>, IngestError> {
    if grid.rows == 0 || grid.cols == 0 {
        return Err(IngestError::InvalidGrid(format!(
            "rows and cols must be positive (got {}x{})",
            grid.rows, grid.cols
        )));
    }
    if !(grid.spacing_m > 0.0) || !grid.spacing_m.is_finite() {
        return Err(IngestError::InvalidGrid(format!("spacing must be positive, got {}", grid.spacing_m)));
    }
    if !(grid.radius_m > 0.0) || !grid.radius_m.is_finite() {
        return Err(IngestError::InvalidGrid(format!("radius must be positive, got {}", grid.radius_m)));
    }
    if !grid.origin.is_valid() {
        return Err(IngestError::InvalidGrid("origin outside WGS84 bounds".into()));
    }
    if !grid.covers_without_gaps() {
        tracing::warn!(
            radius_m = grid.radius_m,
            spacing_m = grid.spacing_m,
            "query radius is below half the grid spacing; coverage will have gaps"
        );
    }

    let deg_per_m_lat = (1.0 / EARTH_RADIUS_M).to_degrees();
    let deg_per_m_lon = deg_per_m_lat / grid.origin.lat.to_radians().cos();
    let row_mid = (grid.rows as f64 - 1.0) / 2.0;
    let col_mid = (grid.cols as f64 - 1.0) / 2.0;

    let mut centers = Vec::with_capacity(grid.rows * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let north = (r as f64 - row_mid) * grid.spacing_m;
            let east = (c as f64 - col_mid) * grid.spacing_m;
            let mut lon = grid.origin.lon + east * deg_per_m_lon;
            if lon > 180.0 {
                lon -= 360.0;
            } else if lon < -180.0 {
                lon += 360.0;
            }
            let center = LatLon::new(grid.origin.lat + north * deg_per_m_lat, lon);
            if !center.is_valid() {
                return Err(IngestError::InvalidGrid("grid extends past a pole".into()));
            }
            centers.push(center);
        }
    }
    Ok(centers)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Great-circle distance, used only as an oracle for the projection.
    fn haversine_m(a: LatLon, b: LatLon) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lon - a.lon).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().asin()
    }

    fn boston(rows: usize, cols: usize) -> QueryGrid {
        QueryGrid::new(LatLon::new(42.36, -71.06), rows, cols)
    }

    #[test]
    fn single_cell_is_origin() {
        assert_eq!(plan_grid(&boston(1, 1)).unwrap(), vec![LatLon::new(42.36, -71.06)]);
    }

    #[test]
    fn adjacent_centers_are_spacing_apart() {
        let centers = plan_grid(&boston(2, 2)).unwrap();
        assert_eq!(centers.len(), 4);
        // row-major: [sw, se, nw, ne]
        for (a, b) in [(0, 1), (2, 3), (0, 2), (1, 3)] {
            let d = haversine_m(centers[a], centers[b]);
            assert!((d - 1000.0).abs() / 1000.0 < 0.01, "{a}-{b}: {d} m");
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(plan_grid(&boston(0, 3)).is_err());
        assert!(plan_grid(&boston(3, 0)).is_err());
        let mut g = boston(2, 2);
        g.spacing_m = 0.0;
        assert!(plan_grid(&g).is_err());
        g.spacing_m = -5.0;
        assert!(plan_grid(&g).is_err());
    }

    #[test]
    fn size_and_distinctness() {
        let g = boston(7, 5);
        let centers = plan_grid(&g).unwrap();
        assert_eq!(centers.len(), 35);
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                assert_ne!(centers[i], centers[j]);
            }
        }
        assert_eq!(centers, plan_grid(&g).unwrap());
    }

    #[test]
    fn default_radius_covers_spacing() {
        assert!(boston(1, 1).covers_without_gaps());
    }
}
