use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PhaseState;

/// Euclidean phase-space distance after scaling x by `dx` and p by `dp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetric {
    pub dx: f64,
    pub dp: f64,
}

impl PhaseMetric {
    /// ΔX = 33 nm, ΔP = 0.324 pg·µm/s.
    pub const PAPER: PhaseMetric = PhaseMetric {
        dx: 0.033,
        dp: 0.324,
    };

    pub fn new(dx: f64, dp: f64) -> Result<Self> {
        if !(dx > 0.0 && dp > 0.0 && dx.is_finite() && dp.is_finite()) {
            return Err(Error::invalid(format!(
                "metric scales must be positive, got ({dx}, {dp})"
            )));
        }
        Ok(Self { dx, dp })
    }

    pub fn distance(&self, a: PhaseState, b: PhaseState) -> f64 {
        ((a.x - b.x) / self.dx).hypot((a.p - b.p) / self.dp)
    }
}

impl Default for PhaseMetric {
    fn default() -> Self {
        Self::PAPER
    }
}

/// ln of the ensemble-mean separation of trajectory pairs sampled at `times`.
///
/// Each pair is two equally long series of states recorded at `times`.
/// Where every pair coincides the mean separation is zero and the log is −∞.
pub fn divergence_curve(
    times: &[f64],
    pairs: &[(Vec<PhaseState>, Vec<PhaseState>)],
    metric: &PhaseMetric,
) -> Result<Vec<(f64, f64)>> {
    if pairs.is_empty() {
        return Err(Error::invalid("divergence curve needs at least one pair"));
    }
    for (a, b) in pairs {
        if a.len() != times.len() || b.len() != times.len() {
            return Err(Error::invalid(
                "trajectory pair length differs from the time axis",
            ));
        }
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = pairs
                .iter()
                .map(|(a, b)| metric.distance(a[i], b[i]))
                .sum::<f64>()
                / pairs.len() as f64;
            (t, mean.ln())
        })
        .collect())
}
