use serde::{Deserialize, Serialize};

use super::{check_finite, AnalysisError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub x: f64,
    pub f: f64,
}

/// Empirical CDF over distinct sample values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTable {
    pub points: Vec<EcdfPoint>,
}

impl EcdfTable {
    /// F(x): fraction of samples at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|p| p.x <= x);
        if i == 0 {
            0.0
        } else {
            self.points[i - 1].f
        }
    }
}

pub fn ecdf(samples: &[f64]) -> Result<EcdfTable, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    check_finite(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut points: Vec<EcdfPoint> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n as f64;
        match points.last_mut() {
            Some(p) if p.x == x => p.f = f,
            _ => points.push(EcdfPoint { x, f }),
        }
    }
    Ok(EcdfTable { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: f64,
    pub count: usize,
    pub density: f64,
}

/// Density histogram with left-closed, right-open bins on multiples of
/// `bin_width`. Empty interior bins are included.
pub fn histogram_pdf(samples: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, AnalysisError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(AnalysisError::NonpositiveBinWidth(bin_width));
    }
    if samples.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    check_finite(samples)?;
    let idx = |x: f64| (x / bin_width).floor() as i64;
    let lo = samples.iter().map(|&x| idx(x)).min().expect("nonempty");
    let hi = samples.iter().map(|&x| idx(x)).max().expect("nonempty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &x in samples {
        counts[(idx(x) - lo) as usize] += 1;
    }
    let norm = samples.len() as f64 * bin_width;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            start: (lo + i as i64) as f64 * bin_width,
            count,
            density: count as f64 / norm,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_small_cases() {
        let t = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        let pts: Vec<_> = t.points.iter().map(|p| (p.x, p.f)).collect();
        assert_eq!(pts, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        let t = ecdf(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(t.points, vec![EcdfPoint { x: 5.0, f: 1.0 }]);
        assert_eq!(t.eval(4.9), 0.0);
        assert_eq!(t.eval(5.0), 1.0);
        assert_eq!(ecdf(&[]), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn histogram_small_cases() {
        let h = histogram_pdf(&[0.5, 1.5], 1.0).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].start, h[0].density), (0.0, 0.5));
        assert_eq!((h[1].start, h[1].density), (1.0, 0.5));
        // 1.0 sits on the edge and belongs to [1, 2)
        let h = histogram_pdf(&[0.2, 1.0], 1.0).unwrap();
        assert_eq!(h[1].count, 1);
        assert_eq!(h[0].count, 1);
        assert_eq!(histogram_pdf(&[1.0], 0.0), Err(AnalysisError::NonpositiveBinWidth(0.0)));
        assert_eq!(histogram_pdf(&[], 1.0), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn histogram_includes_empty_gaps_and_anchors_on_width_multiples() {
        let h = histogram_pdf(&[12.0, 47.0], 10.0).unwrap();
        let starts: Vec<_> = h.iter().map(|b| b.start).collect();
        assert_eq!(starts, vec![10.0, 20.0, 30.0, 40.0]);
        let h = histogram_pdf(&[-0.5], 1.0).unwrap();
        assert_eq!(h[0].start, -1.0);
    }
}
