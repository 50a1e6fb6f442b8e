use super::propagation::{link, loss_for_link};
use super::RadioEnvironment;
use crate::modem::ModemReport;
use crate::record::{
    Decibel, GeoPosition, NeighborCellSample, ServingCellSample, MAX_NEIGHBORS, RSRP_RANGE, RSRQ_RANGE, RSSI_RANGE,
    SINR_RANGE,
};

/// Resource elements per PRB in one OFDM symbol.
pub const RE_PER_PRB: u32 = 12;

/// Wideband received power from one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPower {
    pub earfcn: u32,
    pub pci: u16,
    pub cell_id: u32,
    pub tac: u16,
    pub power_dbm: f64,
}

/// One cell in a raw (unclamped, unrounded) radio sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCell {
    pub earfcn: u32,
    pub pci: u16,
    pub cell_id: u32,
    pub tac: u16,
    pub power_dbm: f64,
    pub rsrp_dbm: f64,
    pub rsrq_db: f64,
}

/// Radio quantities before clamping to the reporting envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioSample {
    pub serving: RawCell,
    pub rssi_dbm: f64,
    pub sinr_db: f64,
    pub neighbors: Vec<RawCell>,
    pub n_prb: u32,
}

fn lin(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// RSRQ = 10·log10(N_PRB) + RSRP − RSSI, everything in dB.
pub fn rsrq_db(n_prb: u32, rsrp_dbm: f64, rssi_dbm: f64) -> f64 {
    10.0 * f64::from(n_prb).log10() + rsrp_dbm - rssi_dbm
}

/// Combines per-station wideband powers into serving, neighbor, and
/// wideband quantities. RSRP is the per-resource-element share of the
/// wideband power spread over 12·N_PRB subcarriers.
pub fn radio_from_powers(n_prb: u32, noise_dbm: f64, powers: &[CellPower]) -> RadioSample {
    assert!(!powers.is_empty(), "at least one station is required");
    let mut order: Vec<&CellPower> = powers.iter().collect();
    order.sort_by(|a, b| b.power_dbm.total_cmp(&a.power_dbm).then(a.pci.cmp(&b.pci)));

    let noise = lin(noise_dbm);
    let total: f64 = powers.iter().map(|p| lin(p.power_dbm)).sum::<f64>() + noise;
    let rssi_dbm = 10.0 * total.log10();
    let re_offset = 10.0 * f64::from(RE_PER_PRB * n_prb).log10();

    let raw = |p: &CellPower| {
        let rsrp = p.power_dbm - re_offset;
        RawCell {
            earfcn: p.earfcn,
            pci: p.pci,
            cell_id: p.cell_id,
            tac: p.tac,
            power_dbm: p.power_dbm,
            rsrp_dbm: rsrp,
            rsrq_db: rsrq_db(n_prb, rsrp, rssi_dbm),
        }
    };

    let serving = raw(order[0]);
    let interference: f64 = order[1..].iter().map(|p| lin(p.power_dbm)).sum();
    let sinr_db = 10.0 * (lin(serving.power_dbm) / (interference + noise)).log10();
    let neighbors = order[1..]
        .iter()
        .filter(|p| !(p.earfcn == serving.earfcn && p.pci == serving.pci))
        .take(MAX_NEIGHBORS)
        .map(|p| raw(p))
        .collect();
    RadioSample { serving, rssi_dbm, sinr_db, neighbors, n_prb }
}

/// Samples the radio field at a position.
pub fn radio_sample(env: &RadioEnvironment, pos: &GeoPosition) -> RadioSample {
    let powers: Vec<CellPower> = env
        .stations
        .iter()
        .map(|s| {
            let l = link(s, pos);
            CellPower {
                earfcn: s.earfcn,
                pci: s.pci,
                cell_id: s.cell_id,
                tac: s.tac,
                power_dbm: s.eirp_dbm - loss_for_link(env, s, pos, &l),
            }
        })
        .collect();
    radio_from_powers(env.n_prb, env.noise_dbm, &powers)
}

fn clamp(v: f64, (lo, hi): (f64, f64)) -> Decibel {
    Decibel::from_f64(v.clamp(lo, hi))
}

impl RadioSample {
    /// Clamps into the reporting envelope and rounds to 0.1 dB.
    pub fn to_report(&self) -> ModemReport {
        let rssi = clamp(self.rssi_dbm, RSSI_RANGE);
        let s = &self.serving;
        ModemReport {
            serving: ServingCellSample {
                earfcn: s.earfcn,
                pci: s.pci,
                cell_id: s.cell_id,
                tac: s.tac,
                rsrp_dbm: clamp(s.rsrp_dbm, RSRP_RANGE),
                rsrq_db: clamp(s.rsrq_db, RSRQ_RANGE),
                rssi_dbm: rssi,
                sinr_db: clamp(self.sinr_db, SINR_RANGE),
            },
            neighbors: self
                .neighbors
                .iter()
                .map(|n| NeighborCellSample {
                    earfcn: n.earfcn,
                    pci: n.pci,
                    rsrp_dbm: clamp(n.rsrp_dbm, RSRP_RANGE),
                    rsrq_db: clamp(n.rsrq_db, RSRQ_RANGE),
                    rssi_dbm: rssi,
                })
                .collect(),
        }
    }
}
