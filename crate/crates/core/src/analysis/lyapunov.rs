//! Maximal Lyapunov exponent from averaged divergence of neighbouring runs.
//!
//! A fiducial trajectory is run from the start point; at `n_samples` points
//! along it, spaced `spacing_periods` drive periods apart, neighbours are
//! spawned and followed for `horizon_periods`. Neighbours of stochastic
//! backends are exact copies of the fiducial state driven by a fresh noise
//! stream; neighbours of noiseless backends are displaced by ε in a random
//! direction of the normalized phase plane. Separations are averaged over
//! the neighbours of a sample point; the logarithm of that mean is then
//! averaged over samples and fiducials (or, with [`Averaging::LogOfMean`],
//! the separations are averaged first). The slope of the linear region of
//! the resulting curve is the exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::Backend;
use super::divergence::PhaseMetric;
use super::fit::{select_window, LinearFit, WindowRule};
use crate::error::{Error, Result};
use crate::noise::{stream_id, NoiseSource};
use crate::state::PhaseState;

/// Order of averaging and taking the logarithm across sample points and
/// fiducials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// ⟨ln Δ⟩: mean of the per-sample log separations.
    #[default]
    MeanOfLog,
    /// ln⟨Δ⟩: log of the mean separation.
    LogOfMean,
}

/// How neighbours are spawned at a sample point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighbourMode {
    /// Fresh noise stream for stochastic backends, ε-displacement otherwise.
    #[default]
    Auto,
    /// ε-displacement sharing the fiducial's noise; a conditional exponent
    /// for stochastic backends.
    DisplaceSharedNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovProtocol {
    pub n_fiducials: usize,
    pub n_samples: usize,
    /// Neighbours spawned at each sample point.
    pub neighbors: usize,
    pub spacing_periods: usize,
    pub horizon_periods: usize,
    /// Periods run before the first sample point.
    pub transient_periods: usize,
    pub records_per_period: usize,
    /// Initial neighbour separation for noiseless backends (normalized units).
    pub epsilon: f64,
    /// Spread of the fiducial starts for noiseless backends (normalized units).
    pub fiducial_spread: f64,
    pub metric: PhaseMetric,
    pub averaging: Averaging,
    pub neighbour_mode: NeighbourMode,
    pub window: WindowRule,
}

impl Default for LyapunovProtocol {
    fn default() -> Self {
        Self {
            n_fiducials: 5,
            n_samples: 10,
            neighbors: 1,
            spacing_periods: 20,
            horizon_periods: 20,
            transient_periods: 0,
            records_per_period: 10,
            epsilon: 1e-6,
            fiducial_spread: 1e-3,
            metric: PhaseMetric::PAPER,
            averaging: Averaging::default(),
            neighbour_mode: NeighbourMode::default(),
            window: WindowRule::default(),
        }
    }
}

impl LyapunovProtocol {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_fiducials", self.n_fiducials),
            ("n_samples", self.n_samples),
            ("neighbors", self.neighbors),
            ("spacing_periods", self.spacing_periods),
            ("horizon_periods", self.horizon_periods),
            ("records_per_period", self.records_per_period),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("protocol.{name} must be positive")));
            }
        }
        if self.spacing_periods < self.horizon_periods {
            return Err(Error::invalid(
                "protocol.spacing_periods must be at least protocol.horizon_periods",
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("protocol.epsilon must be positive"));
        }
        if !(self.fiducial_spread >= 0.0 && self.fiducial_spread.is_finite()) {
            return Err(Error::invalid("protocol.fiducial_spread must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// s⁻¹ (or inverse time units of the system).
    pub lambda: f64,
    pub stderr: f64,
    /// Drive period used for the per-period values.
    pub period: f64,
    /// λ·period.
    pub lambda_per_period: f64,
    pub stderr_per_period: f64,
    /// Time after spawning, in the units of the system.
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub n_fiducials: usize,
    pub n_samples: usize,
    pub neighbors: usize,
    /// Whether r² reached the reliability threshold.
    pub reliable: bool,
    /// Whether a window meeting the strict r² threshold was found.
    pub strict_window: bool,
    /// Normalized phase-space bounding-box diagonal of the fiducials.
    pub attractor_diameter: f64,
    pub fiducial_slopes: Vec<f64>,
    /// `(t, ln Δ̄)` averaged over everything.
    pub curve: Vec<(f64, f64)>,
    pub fit: LinearFit,
}

struct FiducialRun {
    /// Per record: mean over samples of Δ (or of ln Δ for `MeanOfLog`).
    mean_sep: Vec<f64>,
    bbox: (f64, f64, f64, f64),
}

fn run_fiducial<B: Backend>(
    backend: &B,
    start: PhaseState,
    steps_per_period: usize,
    protocol: &LyapunovProtocol,
    seed: u64,
    f: usize,
) -> Result<FiducialRun> {
    let metric = &protocol.metric;
    let stride = steps_per_period / protocol.records_per_period;
    let n_rec = protocol.horizon_periods * protocol.records_per_period;
    let dt = backend.dt();
    let f32 = u32::try_from(f).map_err(|_| Error::invalid("too many fiducials"))?;
    let mut noise = NoiseSource::new(seed, stream_id(f32, 0));
    let mut directions = NoiseSource::new(seed, stream_id(f32, u32::MAX));

    let mut state = backend.prepare(start)?;
    if !backend.stochastic() && protocol.fiducial_spread > 0.0 {
        let dx = protocol.fiducial_spread * metric.dx * directions.standard_normal();
        let dp = protocol.fiducial_spread * metric.dp * directions.standard_normal();
        backend.displace(&mut state, dx, dp)?;
    }

    let mut step_index: u64 = 0;
    let mut bbox = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut track = |pt: PhaseState| {
        let (x, p) = (pt.x / metric.dx, pt.p / metric.dp);
        bbox = (bbox.0.min(x), bbox.1.max(x), bbox.2.min(p), bbox.3.max(p));
    };
    let advance = |state: &mut B::State, noise: &mut NoiseSource, idx: &mut u64| -> Result<()> {
        backend.step(state, *idx as f64 * dt, noise)?;
        *idx += 1;
        Ok(())
    };

    for _ in 0..protocol.transient_periods * steps_per_period {
        advance(&mut state, &mut noise, &mut step_index)?;
    }

    let mut sums = vec![0.0; n_rec + 1];
    for s in 0..protocol.n_samples {
        let mut neighbours = Vec::with_capacity(protocol.neighbors);
        for j in 0..protocol.neighbors {
            let minor = 1 + s * protocol.neighbors + j;
            let minor = u32::try_from(minor).map_err(|_| Error::invalid("too many neighbours"))?;
            let mut twin = state.clone();
            let shared = protocol.neighbour_mode == NeighbourMode::DisplaceSharedNoise;
            if shared || !backend.stochastic() {
                let theta = std::f64::consts::TAU * directions.standard_normal();
                backend.displace(
                    &mut twin,
                    protocol.epsilon * metric.dx * theta.cos(),
                    protocol.epsilon * metric.dp * theta.sin(),
                )?;
            }
            let stream = if shared {
                noise.clone()
            } else {
                NoiseSource::new(seed, stream_id(f32, minor))
            };
            neighbours.push((twin, stream));
        }
        let mut n_idx: Vec<u64> = vec![step_index; protocol.neighbors];
        let mut record = |r: usize, reference: PhaseState, neighbours: &[(B::State, NoiseSource)]| {
            let d = neighbours
                .iter()
                .map(|(twin, _)| metric.distance(reference, backend.phase_point(twin)))
                .sum::<f64>()
                / neighbours.len() as f64;
            sums[r] += match protocol.averaging {
                Averaging::MeanOfLog => d.ln(),
                Averaging::LogOfMean => d,
            };
        };
        let reference = backend.phase_point(&state);
        track(reference);
        record(0, reference, &neighbours);
        for r in 1..=n_rec {
            for _ in 0..stride {
                advance(&mut state, &mut noise, &mut step_index)?;
                for ((twin, nz), idx) in neighbours.iter_mut().zip(n_idx.iter_mut()) {
                    advance(twin, nz, idx)?;
                }
            }
            let reference = backend.phase_point(&state);
            track(reference);
            record(r, reference, &neighbours);
        }
        let rest = (protocol.spacing_periods - protocol.horizon_periods) * steps_per_period;
        for _ in 0..rest {
            advance(&mut state, &mut noise, &mut step_index)?;
        }
    }
    let per = protocol.n_samples as f64;
    Ok(FiducialRun {
        mean_sep: sums.into_iter().map(|v| v / per).collect(),
        bbox,
    })
}

/// Runs the averaged-divergence protocol on `backend` from `start`, with
/// `period` the drive period (the sampling and record unit).
pub fn lyapunov_paper_procedure<B: Backend>(
    backend: &B,
    start: PhaseState,
    period: f64,
    protocol: &LyapunovProtocol,
    seed: u64,
) -> Result<LyapunovEstimate> {
    protocol.validate()?;
    let ratio = period / backend.dt();
    let steps_per_period = ratio.round() as usize;
    if steps_per_period == 0 || (ratio - steps_per_period as f64).abs() > 1e-6 * ratio {
        return Err(Error::invalid(format!(
            "dt must divide the drive period (period/dt = {ratio})"
        )));
    }
    if steps_per_period % protocol.records_per_period != 0 {
        return Err(Error::invalid(format!(
            "records_per_period = {} must divide the {steps_per_period} steps per period",
            protocol.records_per_period
        )));
    }

    let runs: Vec<FiducialRun> = (0..protocol.n_fiducials)
        .into_par_iter()
        .map(|f| run_fiducial(backend, start, steps_per_period, protocol, seed, f))
        .collect::<Result<_>>()?;

    let n_rec = runs[0].mean_sep.len();
    let dt_rec = period / protocol.records_per_period as f64;
    let times: Vec<f64> = (0..n_rec).map(|r| r as f64 * dt_rec).collect();
    let mean: Vec<f64> = (0..n_rec)
        .map(|r| runs.iter().map(|run| run.mean_sep[r]).sum::<f64>() / runs.len() as f64)
        .collect();
    let to_ln = |v: f64| match protocol.averaging {
        Averaging::MeanOfLog => v,
        Averaging::LogOfMean => v.ln(),
    };
    let ln_mean: Vec<f64> = mean.iter().map(|&v| to_ln(v)).collect();
    let bbox = runs.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |b, r| {
            (
                b.0.min(r.bbox.0),
                b.1.max(r.bbox.1),
                b.2.min(r.bbox.2),
                b.3.max(r.bbox.3),
            )
        },
    );
    let diameter = (bbox.1 - bbox.0).hypot(bbox.3 - bbox.2);

    let sel = select_window(&times, &ln_mean, diameter, &protocol.window)?;
    let fit = sel.fit;

    let fiducial_slopes: Vec<f64> = runs
        .iter()
        .map(|run| {
            let ys: Vec<f64> = run.mean_sep[fit.start..fit.end].iter().map(|&v| to_ln(v)).collect();
            super::fit::linear_fit(&times[fit.start..fit.end], &ys)
                .map(|f| f.slope)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let finite: Vec<f64> = fiducial_slopes.iter().copied().filter(|v| v.is_finite()).collect();
    let stderr = if finite.len() >= 2 {
        let m = finite.iter().sum::<f64>() / finite.len() as f64;
        let var = finite.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (finite.len() - 1) as f64;
        (var / finite.len() as f64).sqrt()
    } else {
        fit.slope_stderr
    };

    Ok(LyapunovEstimate {
        lambda: fit.slope,
        stderr,
        period,
        lambda_per_period: fit.slope * period,
        stderr_per_period: stderr * period,
        fit_window: (times[fit.start], times[fit.end - 1]),
        r_squared: fit.r_squared,
        n_fiducials: protocol.n_fiducials,
        n_samples: protocol.n_samples,
        neighbors: protocol.neighbors,
        reliable: fit.r_squared >= protocol.window.reliable_r_squared,
        strict_window: sel.met_threshold,
        attractor_diameter: diameter,
        fiducial_slopes,
        curve: times.into_iter().zip(ln_mean).collect(),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::backend::{ClassicalBackend, ClosureBackend};
    use crate::potentials::SystemSpec;
    use crate::state::MeasurementConfig;

    fn quick() -> LyapunovProtocol {
        LyapunovProtocol {
            n_fiducials: 3,
            n_samples: 3,
            spacing_periods: 10,
            horizon_periods: 10,
            ..LyapunovProtocol::default()
        }
    }

    #[test]
    fn harmonic_has_no_exponent() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 60.0 };
        let period = sys.reference_period().unwrap();
        let backend = ClassicalBackend {
            sys,
            dt: period / 1000.0,
        };
        let protocol = LyapunovProtocol {
            spacing_periods: 40,
            horizon_periods: 40,
            window: WindowRule {
                fixed: Some((0, 401)),
                ..WindowRule::default()
            },
            ..quick()
        };
        let est =
            lyapunov_paper_procedure(&backend, PhaseState::new(0.1, 0.0), period, &protocol, 1)
                .unwrap();
        assert!(est.lambda.abs() < 0.05, "{}", est.lambda);
    }

    #[test]
    fn deterministic_given_seed() {
        let sys = SystemSpec::paper_duffing();
        let period = sys.reference_period().unwrap();
        let backend = ClosureBackend {
            sys,
            dt: period / 1000.0,
            meas: MeasurementConfig::new(9.3e13).unwrap(),
            hbar: crate::units::HBAR,
            initial: None,
        };
        let run = || {
            lyapunov_paper_procedure(&backend, PhaseState::new(-0.098, 2.6), period, &quick(), 7)
                .unwrap()
                .curve
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn protocol_validation() {
        let bad = LyapunovProtocol {
            spacing_periods: 5,
            horizon_periods: 10,
            ..LyapunovProtocol::default()
        };
        assert!(bad.validate().is_err());
        let sys = SystemSpec::paper_duffing();
        let backend = ClassicalBackend { sys, dt: 1e-3 };
        assert!(lyapunov_paper_procedure(
            &backend,
            PhaseState::default(),
            sys.reference_period().unwrap(),
            &quick(),
            0
        )
        .is_err());
    }
}
