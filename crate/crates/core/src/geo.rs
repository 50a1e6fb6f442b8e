//! Local tangent-plane projection around an anchor point.
//!
//! East/north offsets are scaled by the WGS84 meridional and prime-vertical
//! radii of curvature at the anchor latitude. The mapping is exactly
//! invertible; its distortion stays well under a meter within a few
//! kilometers of the anchor, which is the scale of a single flight.

const WGS84_A: f64 = 6_378_137.0;
const WGS84_E2: f64 = 6.694_379_990_14e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    lat0_deg: f64,
    lon0_deg: f64,
    m_per_deg_lat: f64,
    m_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(lat0_deg: f64, lon0_deg: f64) -> Self {
        let phi = lat0_deg.to_radians();
        let s2 = phi.sin().powi(2);
        let w = (1.0 - WGS84_E2 * s2).sqrt();
        let meridional = WGS84_A * (1.0 - WGS84_E2) / (w * w * w);
        let prime_vertical = WGS84_A / w;
        LocalFrame {
            lat0_deg,
            lon0_deg,
            m_per_deg_lat: meridional.to_radians(),
            m_per_deg_lon: (prime_vertical * phi.cos()).to_radians(),
        }
    }

    pub fn anchor(&self) -> (f64, f64) {
        (self.lat0_deg, self.lon0_deg)
    }

    /// Meters east and north of the anchor.
    pub fn forward(&self, lat_deg: f64, lon_deg: f64) -> (f64, f64) {
        let east = (lon_deg - self.lon0_deg) * self.m_per_deg_lon;
        let north = (lat_deg - self.lat0_deg) * self.m_per_deg_lat;
        (east, north)
    }

    /// Latitude and longitude of a point given in meters east/north.
    pub fn inverse(&self, east_m: f64, north_m: f64) -> (f64, f64) {
        (self.lat0_deg + north_m / self.m_per_deg_lat, self.lon0_deg + east_m / self.m_per_deg_lon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude_is_about_111_km() {
        let f = LocalFrame::new(38.9, -95.3);
        let (_, n) = f.forward(39.9, -95.3);
        assert!((n - 111_000.0).abs() < 500.0, "{n}");
        let (e, _) = f.forward(38.9, -94.3);
        // cos(38.9 deg) * 111.3 km
        assert!((e - 86_700.0).abs() < 500.0, "{e}");
    }

    #[test]
    fn round_trip_within_5_km() {
        let f = LocalFrame::new(38.93, -95.35);
        for &(e, n) in &[(0.0, 0.0), (4999.0, 0.0), (-3500.0, 3500.0), (1234.5, -4321.0)] {
            let (lat, lon) = f.inverse(e, n);
            let (e2, n2) = f.forward(lat, lon);
            assert!((e - e2).abs() < 1e-6 && (n - n2).abs() < 1e-6);
            let (lat2, lon2) = f.inverse(e2, n2);
            assert!((lat - lat2).abs() < 1e-7 && (lon - lon2).abs() < 1e-7);
        }
    }
}
