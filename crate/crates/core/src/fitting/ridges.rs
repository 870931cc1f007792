//! Ridge tracing on |S21| maps.

use serde::{Deserialize, Serialize};

use crate::transmission::SpectrumMap;
use crate::{Error, Result};

/// Branch frequencies (GHz) at one field. A single detected branch is
/// stored in `f_upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub mu0_h_t: f64,
    pub f_upper: Option<f64>,
    pub f_lower: Option<f64>,
    pub weight: f64,
}

impl RidgePoint {
    pub fn frequencies(&self) -> impl Iterator<Item = f64> {
        self.f_upper.into_iter().chain(self.f_lower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeData {
    points: Vec<RidgePoint>,
}

impl RidgeData {
    /// At least 4 points, strictly increasing fields, positive weights and
    /// at least one branch per point.
    pub fn new(points: Vec<RidgePoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Data(format!(
                "ridge data needs at least 4 points, got {}",
                points.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0].mu0_h_t < w[1].mu0_h_t)) {
            return Err(Error::Data(
                "ridge fields must be strictly increasing".into(),
            ));
        }
        for p in &points {
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::Data(format!(
                    "weight at {} T must be positive",
                    p.mu0_h_t
                )));
            }
            if p.f_upper.is_none() && p.f_lower.is_none() {
                return Err(Error::Data(format!("no branch at {} T", p.mu0_h_t)));
            }
            if p.frequencies().any(|f| !f.is_finite()) || !p.mu0_h_t.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite ridge value at {} T",
                    p.mu0_h_t
                )));
            }
        }
        Ok(RidgeData { points })
    }

    pub fn points(&self) -> &[RidgePoint] {
        &self.points
    }

    pub fn field_range(&self) -> (f64, f64) {
        (
            self.points[0].mu0_h_t,
            self.points[self.points.len() - 1].mu0_h_t,
        )
    }

    /// Same data with every weight multiplied by `s > 0`.
    pub fn scaled_weights(&self, s: f64) -> Self {
        RidgeData {
            points: self
                .points
                .iter()
                .map(|p| RidgePoint {
                    weight: p.weight * s,
                    ..*p
                })
                .collect(),
        }
    }
}

/// Peaks smaller than this fraction of the column maximum are ignored.
const MIN_RELATIVE_PROMINENCE: f64 = 1e-3;

/// Traces up to two |S21| maxima per field column inside `window` (GHz).
///
/// Peak positions are refined by a parabola through the discrete maximum
/// and its neighbours; weights are the peak prominences normalised to a
/// maximum of 1.
pub fn extract_ridges(map: &SpectrumMap, window: (f64, f64)) -> Result<RidgeData> {
    let freqs = map.grid.freq_axis();
    let idx: Vec<usize> = (0..freqs.len())
        .filter(|&j| freqs[j] >= window.0 && freqs[j] <= window.1)
        .collect();
    if idx.len() < 8 {
        return Err(Error::Data(format!(
            "window [{}, {}] GHz holds {} frequency samples, need ≥ 8",
            window.0,
            window.1,
            idx.len()
        )));
    }
    let f: Vec<f64> = idx.iter().map(|&j| freqs[j]).collect();
    let mut points = Vec::new();
    for (i, h) in map.grid.field_axis().iter().enumerate() {
        let v: Vec<f64> = idx.iter().map(|&j| map.values[i][j]).collect();
        let mut peaks = find_peaks(&v);
        if peaks.is_empty() {
            continue;
        }
        peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
        peaks.truncate(2);
        let mut located: Vec<(f64, f64)> =
            peaks.iter().map(|&(j, p)| (refine(&f, &v, j), p)).collect();
        located.sort_by(|a, b| b.0.total_cmp(&a.0));
        let weight = located.iter().map(|p| p.1).sum::<f64>() / located.len() as f64;
        points.push(RidgePoint {
            mu0_h_t: h.tesla(),
            f_upper: Some(located[0].0),
            f_lower: located.get(1).map(|p| p.0),
            weight,
        });
    }
    if points.is_empty() {
        return Err(Error::Data("no peaks found in any field column".into()));
    }
    let wmax = points.iter().map(|p| p.weight).fold(0.0, f64::max);
    for p in &mut points {
        p.weight /= wmax;
    }
    RidgeData::new(points)
}

/// Interior local maxima with their topographic prominence.
fn find_peaks(v: &[f64]) -> Vec<(usize, f64)> {
    let vmax = v.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for j in 1..v.len() - 1 {
        if !(v[j] > v[j - 1] && v[j] >= v[j + 1]) {
            continue;
        }
        let mut left = v[j];
        for &x in v[..j].iter().rev() {
            if x > v[j] {
                break;
            }
            left = left.min(x);
        }
        let mut right = v[j];
        for &x in &v[j + 1..] {
            if x > v[j] {
                break;
            }
            right = right.min(x);
        }
        let prominence = v[j] - left.max(right);
        if prominence > MIN_RELATIVE_PROMINENCE * vmax {
            out.push((j, prominence));
        }
    }
    out
}

/// Vertex of the parabola through (j−1, j, j+1).
fn refine(f: &[f64], v: &[f64], j: usize) -> f64 {
    let (x0, x1, x2) = (f[j - 1], f[j], f[j + 1]);
    let (y0, y1, y2) = (v[j - 1], v[j], v[j + 1]);
    let d01 = (y0 - y1) / (x0 - x1);
    let d12 = (y1 - y2) / (x1 - x2);
    let a = (d01 - d12) / (x0 - x2);
    if a >= 0.0 {
        return x1;
    }
    let b = d01 - a * (x0 + x1);
    (-b / (2.0 * a)).clamp(x0, x2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let f = [1.0, 1.1, 1.3];
        let v: Vec<f64> = f.iter().map(|x| 2.0 - (x - 1.17f64).powi(2)).collect();
        assert!((refine(&f, &v, 1) - 1.17).abs() < 1e-12);
    }

    #[test]
    fn prominence_of_two_bumps() {
        let v = [0.0, 1.0, 0.2, 0.5, 0.1];
        let p = find_peaks(&v);
        assert_eq!(p.len(), 2);
        assert!((p[0].1 - 0.9).abs() < 1e-12);
        assert!((p[1].1 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let pt = |h: f64| RidgePoint {
            mu0_h_t: h,
            f_upper: Some(5.0),
            f_lower: None,
            weight: 1.0,
        };
        assert!(RidgeData::new((0..3).map(|i| pt(i as f64)).collect()).is_err());
        assert!(RidgeData::new((0..4).map(|i| pt(i as f64)).collect()).is_ok());
        assert!(RidgeData::new(vec![pt(0.0), pt(1.0), pt(1.0), pt(2.0)]).is_err());
        let mut bad: Vec<_> = (0..4).map(|i| pt(i as f64)).collect();
        bad[2].weight = 0.0;
        assert!(RidgeData::new(bad).is_err());
    }
}
