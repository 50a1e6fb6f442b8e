use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geo::LocalFrame;
use crate::record::GeoPosition;

/// Flight ceiling above ground: 400 ft.
pub const CEILING_AGL_M: f64 = 122.0;

/// A waypoint is reached at its own `speed_mps` from the previous one and
/// held for `hover_s` on arrival. The first waypoint's speed is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    #[serde(flatten)]
    pub pos: GeoPosition,
    pub speed_mps: f64,
    #[serde(default)]
    pub hover_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightPlan {
    waypoints: Vec<Waypoint>,
    /// Start time of each segment: hover at wp[i], then leg i -> i+1.
    legs: Vec<Leg>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    hover_start_s: f64,
    travel_start_s: f64,
    travel_s: f64,
}

fn leg_length_m(a: &GeoPosition, b: &GeoPosition) -> f64 {
    let frame = LocalFrame::new(a.lat_deg, a.lon_deg);
    let (e, n) = frame.forward(b.lat_deg, b.lon_deg);
    let up = b.alt_m_amsl - a.alt_m_amsl;
    (e * e + n * n + up * up).sqrt()
}

impl FlightPlan {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, SimError> {
        if waypoints.is_empty() {
            return Err(SimError::InvalidPlan("at least one waypoint is required".into()));
        }
        for (i, w) in waypoints.iter().enumerate() {
            w.pos.validate().map_err(|v| SimError::InvalidPlan(format!("waypoint {i}: {v}")))?;
            match w.pos.alt_m_agl {
                Some(agl) if agl <= CEILING_AGL_M => {}
                Some(agl) => {
                    return Err(SimError::InvalidPlan(format!("waypoint {i}: {agl} m AGL exceeds the 122 m ceiling")))
                }
                None => return Err(SimError::InvalidPlan(format!("waypoint {i}: alt_m_agl is required"))),
            }
            if !(w.speed_mps > 0.0 && w.speed_mps.is_finite()) {
                return Err(SimError::InvalidPlan(format!("waypoint {i}: speed_mps must be > 0")));
            }
            if !(w.hover_s >= 0.0 && w.hover_s.is_finite()) {
                return Err(SimError::InvalidPlan(format!("waypoint {i}: hover_s must be >= 0")));
            }
        }
        let mut legs = Vec::with_capacity(waypoints.len());
        let mut t = 0.0;
        for (i, w) in waypoints.iter().enumerate() {
            let hover_start_s = t;
            t += w.hover_s;
            let travel_s = match waypoints.get(i + 1) {
                Some(next) => leg_length_m(&w.pos, &next.pos) / next.speed_mps,
                None => 0.0,
            };
            legs.push(Leg { hover_start_s, travel_start_s: t, travel_s });
            t += travel_s;
        }
        Ok(FlightPlan { waypoints, legs })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn duration_s(&self) -> f64 {
        let last = self.legs.last().expect("plan is nonempty");
        last.travel_start_s + last.travel_s
    }
}

fn lerp(a: f64, b: f64, f: f64) -> f64 {
    a + (b - a) * f
}

/// Position along the plan at `t_s` seconds after take-off. Times past the
/// end hold the final waypoint.
pub fn flight_position(plan: &FlightPlan, t_s: f64) -> GeoPosition {
    let t = t_s.max(0.0);
    let i = plan.legs.partition_point(|l| l.hover_start_s <= t).saturating_sub(1);
    let leg = plan.legs[i];
    let here = plan.waypoints[i].pos;
    let Some(next) = plan.waypoints.get(i + 1).map(|w| w.pos) else {
        return here;
    };
    if t < leg.travel_start_s || leg.travel_s == 0.0 {
        return here;
    }
    let f = ((t - leg.travel_start_s) / leg.travel_s).min(1.0);
    GeoPosition {
        lat_deg: lerp(here.lat_deg, next.lat_deg, f),
        lon_deg: lerp(here.lon_deg, next.lon_deg, f),
        alt_m_amsl: lerp(here.alt_m_amsl, next.alt_m_amsl, f),
        alt_m_agl: match (here.alt_m_agl, next.alt_m_agl) {
            (Some(a), Some(b)) => Some(lerp(a, b, f)),
            _ => None,
        },
    }
}

/// Vertical climb over one ground point: hover `hover_s` at each altitude
/// from `from_agl` to `to_agl` in `step_m` increments.
pub fn climb_plan(
    lat_deg: f64,
    lon_deg: f64,
    ground_amsl_m: f64,
    from_agl: f64,
    to_agl: f64,
    step_m: f64,
    hover_s: f64,
    climb_mps: f64,
) -> Result<FlightPlan, SimError> {
    let mut waypoints = Vec::new();
    let mut agl = from_agl;
    while agl <= to_agl + 1e-9 {
        waypoints.push(Waypoint {
            pos: GeoPosition::new(lat_deg, lon_deg, ground_amsl_m + agl, Some(agl)),
            speed_mps: climb_mps,
            hover_s,
        });
        agl += step_m;
    }
    FlightPlan::new(waypoints)
}
