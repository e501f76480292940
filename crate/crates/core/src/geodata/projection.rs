use serde::{Deserialize, Serialize};

use super::GeodataError;
use crate::geom::Point2;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meridian arc length of one degree on the spherical Earth used here.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    fn validate(self) -> Result<(), GeodataError> {
        if !(-180.0..=180.0).contains(&self.lon) || !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeodataError::Domain(format!(
                "coordinate (lon {}, lat {}) out of range",
                self.lon, self.lat
            )));
        }
        Ok(())
    }
}

/// Equirectangular projection onto the tangent plane at `reference`.
/// `x` grows east, `y` grows north.
pub fn project_to_local(points: &[LonLat], reference: LonLat) -> Result<Vec<Point2>, GeodataError> {
    reference.validate()?;
    let cos_ref = reference.lat.to_radians().cos();
    points
        .iter()
        .map(|p| {
            p.validate()?;
            let mut dlon = p.lon - reference.lon;
            if dlon > 180.0 {
                dlon -= 360.0;
            } else if dlon < -180.0 {
                dlon += 360.0;
            }
            Ok(Point2::new(
                dlon * METERS_PER_DEGREE * cos_ref,
                (p.lat - reference.lat) * METERS_PER_DEGREE,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn haversine(a: LonLat, b: LonLat) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lon - a.lon).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().asin()
    }

    #[test]
    fn reference_maps_to_origin() {
        let r = LonLat::new(-83.0, 39.96);
        assert_eq!(project_to_local(&[r], r).unwrap(), vec![Point2::new(0.0, 0.0)]);
    }

    #[test]
    fn meridian_and_parallel_offsets() {
        let r = LonLat::new(10.0, 0.0);
        let north = project_to_local(&[LonLat::new(10.0, 0.001)], r).unwrap()[0];
        assert!(north.x.abs() < 1e-12);
        assert!((north.y - 111.1949).abs() < 1e-3);

        let r60 = LonLat::new(10.0, 60.0);
        let east = project_to_local(&[LonLat::new(10.001, 60.0)], r60).unwrap()[0];
        assert!((east.x - 0.5 * 111_194.9 / 1000.0).abs() < 1e-3);
        assert!(east.y.abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let r = LonLat::new(0.0, 0.0);
        assert!(project_to_local(&[LonLat::new(0.0, 91.0)], r).is_err());
        assert!(project_to_local(&[LonLat::new(181.0, 0.0)], r).is_err());
        assert!(project_to_local(&[], LonLat::new(0.0, -90.5)).is_err());
    }

    proptest! {
        #[test]
        fn distance_distortion_below_half_percent(
            lat in -70.0f64..70.0,
            lon in -179.0f64..179.0,
            bearing in 0.0f64..std::f64::consts::TAU,
            dist in 100.0f64..10_000.0,
        ) {
            let r = LonLat::new(lon, lat);
            let dlat = dist * bearing.cos() / METERS_PER_DEGREE;
            let dlon = dist * bearing.sin() / (METERS_PER_DEGREE * lat.to_radians().cos());
            let p = LonLat::new(lon + dlon, lat + dlat);
            let local = project_to_local(&[p], r).unwrap()[0];
            let truth = haversine(r, p);
            prop_assert!((local.length() - truth).abs() / truth < 0.005);
        }

        #[test]
        fn injective_in_one_degree_window(
            lat in -60.0f64..60.0,
            a in (0.0f64..1.0, 0.0f64..1.0),
            b in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            prop_assume!(a != b);
            let r = LonLat::new(0.0, lat);
            let pts = [LonLat::new(a.0, lat + a.1 * 0.5), LonLat::new(b.0, lat + b.1 * 0.5)];
            let out = project_to_local(&pts, r).unwrap();
            prop_assert_ne!(out[0], out[1]);
        }
    }
}
