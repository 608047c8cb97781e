use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PhaseState;

/// Normalized 2-D histogram of phase-space points on a fixed box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub bins: usize,
    /// Row-major by x bin; sums to 1 over the in-range points.
    pub weights: Vec<f64>,
    /// Points that fell outside the box.
    pub outside: usize,
}

impl Histogram2d {
    pub fn build(
        points: &[PhaseState],
        x_range: (f64, f64),
        p_range: (f64, f64),
        bins: usize,
    ) -> Result<Self> {
        if bins == 0 || !(x_range.1 > x_range.0) || !(p_range.1 > p_range.0) {
            return Err(Error::invalid("histogram needs bins > 0 and increasing ranges"));
        }
        let mut counts = vec![0usize; bins * bins];
        let mut outside = 0;
        let cell = |v: f64, (lo, hi): (f64, f64)| -> Option<usize> {
            if v < lo || v > hi || !v.is_finite() {
                return None;
            }
            Some((((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1))
        };
        for s in points {
            match (cell(s.x, x_range), cell(s.p, p_range)) {
                (Some(i), Some(j)) => counts[i * bins + j] += 1,
                _ => outside += 1,
            }
        }
        let inside = (points.len() - outside).max(1) as f64;
        Ok(Self {
            x_range,
            p_range,
            bins,
            weights: counts.iter().map(|&c| c as f64 / inside).collect(),
            outside,
        })
    }

    /// Number of cells holding at least one point.
    pub fn occupied(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// Bhattacharyya coefficient Σ√(aᵢbᵢ) between histograms on the same box.
pub fn bhattacharyya(a: &Histogram2d, b: &Histogram2d) -> Result<f64> {
    if a.bins != b.bins || a.x_range != b.x_range || a.p_range != b.p_range {
        return Err(Error::invalid("histograms are on different boxes"));
    }
    Ok(a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(u, v)| (u * v).sqrt())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(offset: f64) -> Vec<PhaseState> {
        (0..400)
            .map(|i| PhaseState::new(((i % 20) as f64 + offset) / 20.0, ((i / 20) as f64 + 0.5) / 20.0))
            .collect()
    }

    #[test]
    fn identical_sets_overlap_fully() {
        let h = Histogram2d::build(&pts(0.5), (0.0, 1.0), (0.0, 1.0), 20).unwrap();
        assert_eq!(h.occupied(), 400);
        assert!((bhattacharyya(&h, &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_sets_do_not_overlap() {
        let a = Histogram2d::build(&[PhaseState::new(0.1, 0.1)], (0.0, 1.0), (0.0, 1.0), 20).unwrap();
        let b = Histogram2d::build(&[PhaseState::new(0.9, 0.9)], (0.0, 1.0), (0.0, 1.0), 20).unwrap();
        assert_eq!(bhattacharyya(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn outside_points_counted() {
        let h = Histogram2d::build(&[PhaseState::new(2.0, 0.0), PhaseState::new(0.5, 0.5)], (0.0, 1.0), (0.0, 1.0), 4)
            .unwrap();
        assert_eq!(h.outside, 1);
        assert!((h.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
