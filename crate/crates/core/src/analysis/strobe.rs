use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::PhaseState;

/// One phase-space sample per drive period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StroboscopicMap {
    pub period: f64,
    /// `(t_n, state)` with t_n = t₀ + n·period.
    pub samples: Vec<(f64, PhaseState)>,
}

impl StroboscopicMap {
    pub fn points(&self) -> Vec<PhaseState> {
        self.samples.iter().map(|(_, s)| *s).collect()
    }
}

const COMMENSURATE_TOL: f64 = 1e-6;

fn whole(ratio: f64, what: &str) -> Result<usize> {
    let r = ratio.round();
    if r < 0.0 || (ratio - r).abs() > COMMENSURATE_TOL * ratio.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "{what} is not a whole number of steps ({ratio}); choose dt dividing the drive period"
        )));
    }
    Ok(r as usize)
}

/// Samples `traj` (fixed-step `(t, state)` rows) at t₀ + n·2π/ω.
pub fn stroboscopic_map(traj: &[(f64, PhaseState)], w: f64, t0: f64) -> Result<StroboscopicMap> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("drive frequency must be positive, got {w}")));
    }
    if traj.len() < 2 {
        return Err(Error::invalid("trajectory needs at least two rows"));
    }
    let period = std::f64::consts::TAU / w;
    let start = traj[0].0;
    let dt = traj[1].0 - traj[0].0;
    if !(dt > 0.0) {
        return Err(Error::invalid("trajectory times must increase"));
    }
    let span = traj[traj.len() - 1].0 - start;
    if span < 2.0 * period * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "trajectory covers {:.3} drive periods, need at least 2",
            span / period
        )));
    }
    let stride = whole(period / dt, "the drive period")?;
    if t0 < start - 1e-12 * period {
        return Err(Error::invalid("strobe origin precedes the trajectory"));
    }
    let offset = whole((t0 - start) / dt, "the strobe origin offset")?;
    let samples = traj
        .iter()
        .skip(offset)
        .step_by(stride)
        .map(|&(t, s)| (t, s))
        .collect();
    Ok(StroboscopicMap { period, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::newton_trajectory;
    use crate::potentials::SystemSpec;
    use std::f64::consts::TAU;

    #[test]
    fn harmonic_strobe_is_fixed_point() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let n = 1000;
        let traj =
            newton_trajectory(&sys, PhaseState::new(1.0, 0.3), 0.0, TAU / n as f64, 20 * n).unwrap();
        let map = stroboscopic_map(&traj, 1.0, 0.0).unwrap();
        assert_eq!(map.samples.len(), 21);
        for (_, s) in &map.samples {
            assert!((s.x - 1.0).abs() < 1e-8 && (s.p - 0.3).abs() < 1e-8);
        }
    }

    #[test]
    fn incommensurate_step_rejected() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let traj = newton_trajectory(&sys, PhaseState::new(1.0, 0.0), 0.0, 0.0123, 2000).unwrap();
        assert!(stroboscopic_map(&traj, 1.0, 0.0).is_err());
    }

    #[test]
    fn short_trajectory_rejected() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let traj = newton_trajectory(&sys, PhaseState::new(1.0, 0.0), 0.0, TAU / 100.0, 150).unwrap();
        assert!(stroboscopic_map(&traj, 1.0, 0.0).is_err());
    }

    #[test]
    fn offset_origin() {
        let traj: Vec<(f64, PhaseState)> = (0..401)
            .map(|i| (i as f64 * 0.01 * TAU, PhaseState::new(i as f64, 0.0)))
            .collect();
        let map = stroboscopic_map(&traj, 1.0, 0.5 * TAU).unwrap();
        let xs: Vec<f64> = map.samples.iter().map(|(_, s)| s.x).collect();
        assert_eq!(xs, vec![50.0, 150.0, 250.0, 350.0]);
    }
}
