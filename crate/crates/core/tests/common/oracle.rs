//! Deliberately naive reference implementations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skylog_core::geo::LocalFrame;
use skylog_core::record::{GeoPosition, MeasurementRecord, NeighborCellSample, ServingCellSample, Source};
use skylog_core::Decibel;

/// (x, fraction of samples <= x) for each distinct x, by counting.
pub fn ecdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = Vec::new();
    for &s in samples {
        if !xs.contains(&s) {
            xs.push(s);
        }
    }
    xs.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    xs.into_iter().map(|x| (x, samples.iter().filter(|&&s| s <= x).count() as f64 / n)).collect()
}

/// (bin start, count) by testing every sample against every bin.
pub fn histogram(samples: &[f64], width: f64) -> Vec<(f64, usize)> {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut k = (lo / width).floor();
    let mut out = Vec::new();
    while k * width <= hi {
        let start = k * width;
        out.push((start, samples.iter().filter(|&&s| start <= s && s < start + width).count()));
        k += 1.0;
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_std(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v);
    Some((v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// Rank by counting smaller and equal values.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation from raw sums.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Random valid records within `radius_m` of (38.93, -95.35), served by
/// one of `cells` cells, with up to three neighbors.
pub fn random_records(seed: u64, n: usize, cells: u32, radius_m: f64) -> Vec<MeasurementRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = LocalFrame::new(38.93, -95.35);
    (0..n)
        .map(|i| {
            let (lat, lon) = frame.inverse(rng.gen_range(-radius_m..radius_m), rng.gen_range(-radius_m..radius_m));
            let agl = rng.gen_range(0.0..122.0);
            let rsrp = rng.gen_range(-1300..-600);
            let cell = rng.gen_range(0..cells);
            let neighbors = (0..rng.gen_range(0..=3))
                .map(|k| {
                    let nr = rng.gen_range(-1400..-700);
                    NeighborCellSample {
                        earfcn: 5230,
                        pci: 200 + k,
                        rsrp_dbm: Decibel::from_tenths(nr),
                        rsrq_db: Decibel::from_tenths(rng.gen_range(-240..-30)),
                        rssi_dbm: Decibel::from_tenths(nr.max(-1200) + 50),
                    }
                })
                .collect();
            MeasurementRecord {
                ts_unix_ms: i as i64 * 1000,
                pos: GeoPosition::new(lat, lon, 270.0 + agl, Some(agl)),
                serving: ServingCellSample {
                    earfcn: 5230,
                    pci: cell as u16,
                    cell_id: 1000 + cell,
                    tac: 1,
                    rsrp_dbm: Decibel::from_tenths(rsrp),
                    rsrq_db: Decibel::from_tenths(rng.gen_range(-240..-30)),
                    rssi_dbm: Decibel::from_tenths(rsrp + rng.gen_range(100..300)),
                    sinr_db: Decibel::from_tenths(rng.gen_range(-200..400)),
                },
                neighbors,
                source: Source::Sim,
            }
        })
        .collect()
}

pub fn random_samples(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}
