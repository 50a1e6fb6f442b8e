//! Deterministic multi-cell radio environment and flight-path generator.
//!
//! Every stochastic quantity (shadowing, line-of-sight state, RTT jitter)
//! is a pure function of the environment seed and a spatial or temporal
//! key, so identical inputs always produce identical traces.

mod backend;
mod e2e;
mod flight;
mod propagation;
mod radio;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::GeoPosition;

pub use backend::{SimBackend, SimE2eEngine};
pub use e2e::{synth_e2e, synth_rtt_summary, E2eSample};
pub use flight::{climb_plan, flight_position, FlightPlan, Waypoint};
pub use propagation::{free_space_loss_1m_db, los_probability, los_state, path_loss_db, shadowing_db, LinkState};
pub use radio::{radio_from_powers, radio_sample, rsrq_db, CellPower, RadioSample, RE_PER_PRB};

/// The bundled three-station environment with its climb plan.
pub const THREECELL_ENV: &str = include_str!("../../fixtures/threecell.env");

#[derive(Debug, Error)]
pub enum SimError {
    #[error("3D distance {0:.3} m is below the 1 m reference distance")]
    DistanceTooSmall(f64),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid flight plan: {0}")]
    InvalidPlan(String),
    #[error("{path}: line {line}, column {column}: {message}")]
    Config { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    /// Antenna position; `alt_m_amsl` is the antenna altitude and
    /// `alt_m_agl` its height above ground.
    #[serde(flatten)]
    pub site_pos: GeoPosition,
    pub eirp_dbm: f64,
    pub earfcn: u32,
    pub pci: u16,
    pub cell_id: u32,
    pub tac: u16,
}

impl BaseStation {
    pub fn antenna_height_m(&self) -> f64 {
        self.site_pos.alt_m_agl.unwrap_or(0.0)
    }

    pub fn ground_amsl_m(&self) -> f64 {
        self.site_pos.alt_m_amsl - self.antenna_height_m()
    }

    fn validate(&self) -> Result<(), SimError> {
        self.site_pos.validate().map_err(|v| SimError::InvalidEnvironment(format!("station {}: {v}", self.pci)))?;
        if !(30.0..=65.0).contains(&self.eirp_dbm) {
            return Err(SimError::InvalidEnvironment(format!(
                "station {}: eirp_dbm {} out of [30,65]",
                self.pci, self.eirp_dbm
            )));
        }
        if self.antenna_height_m() <= 0.0 {
            return Err(SimError::InvalidEnvironment(format!("station {}: antenna height must be > 0", self.pci)));
        }
        if self.pci > crate::record::PCI_MAX || self.cell_id > crate::record::CELL_ID_MAX {
            return Err(SimError::InvalidEnvironment(format!("station {}: pci or cell_id out of range", self.pci)));
        }
        Ok(())
    }
}

fn default_n_los() -> f64 {
    2.2
}
fn default_n_nlos() -> f64 {
    3.5
}
fn default_shadow_sigma() -> f64 {
    6.0
}
fn default_n_prb() -> u32 {
    50
}
fn default_noise() -> f64 {
    -104.5
}
fn default_freq() -> f64 {
    2.1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioEnvironment {
    pub stations: Vec<BaseStation>,
    #[serde(default = "default_n_los")]
    pub n_los: f64,
    #[serde(default = "default_n_nlos")]
    pub n_nlos: f64,
    #[serde(default = "default_shadow_sigma")]
    pub shadow_sigma_db: f64,
    #[serde(default = "default_n_prb")]
    pub n_prb: u32,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default = "default_freq")]
    pub freq_hz: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RadioEnvironment {
    pub fn new(stations: Vec<BaseStation>, seed: u64) -> Result<Self, SimError> {
        let env = RadioEnvironment {
            stations,
            n_los: default_n_los(),
            n_nlos: default_n_nlos(),
            shadow_sigma_db: default_shadow_sigma(),
            n_prb: default_n_prb(),
            noise_dbm: default_noise(),
            freq_hz: default_freq(),
            seed,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.stations.is_empty() {
            return Err(SimError::InvalidEnvironment("at least one station is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.stations {
            s.validate()?;
            if !seen.insert((s.earfcn, s.pci)) {
                return Err(SimError::InvalidEnvironment(format!(
                    "duplicate (earfcn, pci) = ({}, {})",
                    s.earfcn, s.pci
                )));
            }
        }
        if !(self.n_los > 0.0 && self.n_nlos > 0.0) {
            return Err(SimError::InvalidEnvironment("path-loss exponents must be positive".into()));
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return Err(SimError::InvalidEnvironment("shadow_sigma_db must be >= 0".into()));
        }
        if self.n_prb == 0 || !(self.freq_hz > 0.0) || !self.noise_dbm.is_finite() {
            return Err(SimError::InvalidEnvironment("n_prb, freq_hz and noise_dbm must be positive/finite".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Environment and flight-plan configuration as stored on disk. The plan
/// may live in the same file or in a separate one with only `waypoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub env: RadioEnvironment,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlanFile {
    waypoints: Vec<Waypoint>,
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, SimError> {
    serde_json::from_str(text).map_err(|e| SimError::Config {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String, SimError> {
    std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.display().to_string(), source })
}

impl SimConfig {
    pub fn parse(name: &str, text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = parse_json(name, text)?;
        cfg.env.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::parse(&path.display().to_string(), &read_text(path)?)
    }

    pub fn canonical() -> Self {
        Self::parse("threecell.env", THREECELL_ENV).expect("bundled environment is valid")
    }

    pub fn plan(&self) -> Result<FlightPlan, SimError> {
        FlightPlan::new(self.waypoints.clone())
    }
}

pub fn load_plan(path: &Path) -> Result<FlightPlan, SimError> {
    let name = path.display().to_string();
    let plan: PlanFile = parse_json(&name, &read_text(path)?)?;
    FlightPlan::new(plan.waypoints)
}

pub fn plan_to_json(plan: &FlightPlan) -> String {
    serde_json::to_string_pretty(&PlanFile { waypoints: plan.waypoints().to_vec() }).expect("plan serializes")
}
