use kidrank_core::features::{haversine_miles, EARTH_RADIUS_MILES};
use kidrank_core::GeoPoint;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = GeoPoint> {
    (-90.0..=90.0f64, -180.0..=180.0f64).prop_map(|(lat, lon)| GeoPoint::new(lat, lon).unwrap())
}

proptest! {
    #[test]
    fn symmetric_and_bounded(a in point(), b in point()) {
        let d = haversine_miles(a, b);
        prop_assert!(d >= 0.0);
        prop_assert!(d <= std::f64::consts::PI * EARTH_RADIUS_MILES + 1e-9);
        prop_assert!((d - haversine_miles(b, a)).abs() < 1e-9);
        prop_assert_eq!(haversine_miles(a, a), 0.0);
    }

    #[test]
    fn triangle_inequality(a in point(), b in point(), c in point()) {
        let ab = haversine_miles(a, b);
        let bc = haversine_miles(b, c);
        let ac = haversine_miles(a, c);
        prop_assert!(ac <= ab + bc + 1e-6);
    }

    #[test]
    fn meridian_distance_is_arc_length(lat1 in -90.0..=90.0f64, lat2 in -90.0..=90.0f64, lon in -180.0..=180.0f64) {
        let d = haversine_miles(GeoPoint::new(lat1, lon).unwrap(), GeoPoint::new(lat2, lon).unwrap());
        let arc = (lat1 - lat2).abs().to_radians() * EARTH_RADIUS_MILES;
        prop_assert!((d - arc).abs() < 1e-6);
    }
}
