use crate::domain::{AirportClass, AirportIndex, GeoPoint};
use crate::error::{Error, Result};

pub const EARTH_RADIUS_MILES: f64 = 3958.8;

/// Great-circle distance in statute miles.
pub fn haversine_miles(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat().to_radians(), b.lat().to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon() - a.lon()).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    // clamp guards asin against h drifting past 1 for antipodal points
    2.0 * EARTH_RADIUS_MILES * h.sqrt().min(1.0).asin()
}

pub fn nearest_airport_miles(loc: GeoPoint, index: &AirportIndex, class: AirportClass) -> Result<f64> {
    index
        .of_class(class)
        .map(|a| haversine_miles(loc, a.location))
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Precondition(format!("airport index has no {class} airports")))
}
