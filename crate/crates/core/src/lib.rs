//! Geo-tagged LTE measurement toolkit for aerial drive tests.
//!
//! The crate collects Radio Access Network metrics and end-to-end service
//! measurements along a flight, stores them as line-delimited traces, and
//! turns traces into coverage statistics and map exports. A deterministic
//! radio simulator stands in for the modem so the whole pipeline runs
//! without hardware.

pub mod analysis;
pub mod collector;
pub mod export;
pub mod geo;
pub mod modem;
pub mod pipeline;
pub mod probe;
pub mod record;
pub mod sim;

pub use record::{
    Decibel, EndToEndRecord, GeoPosition, MeasurementRecord, NeighborCellSample, RttSummary, ServingCellSample,
    Source,
};
