//! Great-circle geometry on the WGS-84 mean-radius sphere.

use crate::Scalar;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Haversine distance in meters between two (lat, lon) points in degrees.
///
/// Symmetric, and exactly zero for identical points.
pub fn haversine_m<F: Scalar>(lat1: F, lon1: F, lat2: F, lon2: F) -> F {
    let radius = F::from_f64(EARTH_RADIUS_M).expect("radius fits any float");
    let two = F::one() + F::one();
    let dlat = (lat2 - lat1).to_radians();
    let dlon = (lon2 - lon1).to_radians();
    let a = (dlat / two).sin().powi(2)
        + lat1.to_radians().cos() * lat2.to_radians().cos() * (dlon / two).sin().powi(2);
    let c = two * a.sqrt().min(F::one()).asin();
    radius * c
}
