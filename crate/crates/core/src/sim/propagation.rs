use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BaseStation, RadioEnvironment, SimError};
use crate::geo::LocalFrame;
use crate::record::GeoPosition;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Edge length of the voxels that freeze shadowing and LoS draws.
pub(crate) const VOXEL_M: f64 = 10.0;

const TAG_LOS: u64 = 0x4c4f_5321;
const TAG_SHADOW: u64 = 0x5348_4457;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    LoS,
    NLoS,
}

/// Free-space loss at the 1 m reference distance, 20·log10(4π·f/c).
pub fn free_space_loss_1m_db(freq_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * freq_hz / SPEED_OF_LIGHT).log10()
}

/// Probability of line of sight at a given height above ground.
pub fn los_probability(alt_agl_m: f64) -> f64 {
    (0.15 + 0.85 * (alt_agl_m / 100.0)).clamp(0.15, 1.0)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| mix(h ^ w))
}

pub(crate) fn unit_uniform(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Geometry of one station/UAV pair.
pub(crate) struct Link {
    pub distance_m: f64,
    pub voxel: [i64; 3],
}

pub(crate) fn link(station: &BaseStation, pos: &GeoPosition) -> Link {
    let frame = LocalFrame::new(station.site_pos.lat_deg, station.site_pos.lon_deg);
    let (east, north) = frame.forward(pos.lat_deg, pos.lon_deg);
    let up = pos.alt_m_amsl - station.site_pos.alt_m_amsl;
    let agl = height_above_ground(station, pos);
    Link {
        distance_m: (east * east + north * north + up * up).sqrt(),
        voxel: [
            (east / VOXEL_M).floor() as i64,
            (north / VOXEL_M).floor() as i64,
            (agl / VOXEL_M).floor() as i64,
        ],
    }
}

/// Height above ground, falling back to the station's ground elevation
/// when the position carries only AMSL.
pub(crate) fn height_above_ground(station: &BaseStation, pos: &GeoPosition) -> f64 {
    pos.alt_m_agl.unwrap_or(pos.alt_m_amsl - station.ground_amsl_m()).max(0.0)
}

fn voxel_key(env: &RadioEnvironment, tag: u64, station: &BaseStation, voxel: [i64; 3]) -> u64 {
    hash_words(&[env.seed, tag, u64::from(station.cell_id), u64::from(station.pci), voxel[0] as u64, voxel[1] as u64, voxel[2] as u64])
}

pub(crate) fn los_for_link(env: &RadioEnvironment, station: &BaseStation, pos: &GeoPosition, l: &Link) -> LinkState {
    let p = los_probability(height_above_ground(station, pos));
    if p >= 1.0 {
        return LinkState::LoS;
    }
    let u = unit_uniform(voxel_key(env, TAG_LOS, station, l.voxel));
    if u < p {
        LinkState::LoS
    } else {
        LinkState::NLoS
    }
}

/// Line-of-sight state for a station/UAV pair. The uniform draw is frozen
/// per (seed, station, 10 m ground voxel, 10 m altitude band).
pub fn los_state(env: &RadioEnvironment, station: &BaseStation, pos: &GeoPosition) -> LinkState {
    los_for_link(env, station, pos, &link(station, pos))
}

pub(crate) fn shadow_for_link(env: &RadioEnvironment, station: &BaseStation, l: &Link) -> f64 {
    if env.shadow_sigma_db == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(voxel_key(env, TAG_SHADOW, station, l.voxel));
    let z: f64 = StandardNormal.sample(&mut rng);
    z * env.shadow_sigma_db
}

/// Zero-mean log-normal shadowing term frozen per (station, 10 m voxel).
pub fn shadowing_db(env: &RadioEnvironment, station: &BaseStation, pos: &GeoPosition) -> f64 {
    shadow_for_link(env, station, &link(station, pos))
}

pub(crate) fn loss_for_link(env: &RadioEnvironment, station: &BaseStation, pos: &GeoPosition, l: &Link) -> f64 {
    let n = match los_for_link(env, station, pos, l) {
        LinkState::LoS => env.n_los,
        LinkState::NLoS => env.n_nlos,
    };
    let d = l.distance_m.max(1.0);
    free_space_loss_1m_db(env.freq_hz) + 10.0 * n * d.log10() + shadow_for_link(env, station, l)
}

/// Log-distance path loss with a LoS/NLoS exponent and frozen shadowing.
pub fn path_loss_db(env: &RadioEnvironment, station: &BaseStation, pos: &GeoPosition) -> Result<f64, SimError> {
    let l = link(station, pos);
    if l.distance_m < 1.0 {
        return Err(SimError::DistanceTooSmall(l.distance_m));
    }
    Ok(loss_for_link(env, station, pos, &l))
}
