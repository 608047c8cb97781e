use num_complex::Complex64;

use super::{Grid, Spectral, WaveFunction};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::SystemSpec;
use crate::state::MeasurementConfig;

/// Largest norm change tolerated across the unitary part of a step.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Split-step integrator of the conditioned Schrödinger equation
///
/// ```text
/// dψ = [−(i/ħ)H − k(x−⟨x⟩)²] ψ dt + √(2k)(x−⟨x⟩) ψ dW
/// ```
///
/// A step applies the measurement update exp(√(2k)X·dW − 2kX²dt) with
/// X = x − ⟨x⟩ (its Itô expansion is the measurement part above), then a
/// Strang-ordered V/2, kinetic, V/2 propagation, then renormalizes.
pub struct SseStepper {
    sys: SystemSpec,
    grid: Grid,
    hbar: f64,
    dt: f64,
    meas: MeasurementConfig,
    spec: Spectral,
    kinetic: Vec<Complex64>,
    x: Vec<f64>,
}

impl SseStepper {
    pub fn new(
        sys: &SystemSpec,
        grid: Grid,
        hbar: f64,
        dt: f64,
        meas: MeasurementConfig,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid(format!("ħ must be positive, got {hbar}")));
        }
        sys.validate()?;
        let m = sys.mass();
        let kinetic = super::wavenumbers(grid.n, grid.dx)
            .into_iter()
            .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * m)))
            .collect();
        Ok(Self {
            sys: *sys,
            grid,
            hbar,
            dt,
            meas,
            spec: Spectral::new(grid.n),
            kinetic,
            x: grid.positions(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn measurement(&self) -> &MeasurementConfig {
        &self.meas
    }

    fn check_compatible(&self, psi: &WaveFunction) -> Result<()> {
        if psi.grid() != &self.grid || psi.hbar() != self.hbar {
            return Err(Error::invalid(
                "wavefunction grid or ħ differs from the stepper's",
            ));
        }
        Ok(())
    }

    /// Advances `psi` from `t` to `t + dt`, drawing dW from `noise` when k > 0.
    pub fn step(&self, psi: &mut WaveFunction, t: f64, noise: &mut NoiseSource) -> Result<()> {
        let dw = if self.meas.is_observed() {
            noise.increment(self.dt)
        } else {
            0.0
        };
        self.step_with(psi, t, dw)
    }

    /// Advances `psi` from `t` to `t + dt` with the given Wiener increment.
    pub fn step_with(&self, psi: &mut WaveFunction, t: f64, dw: f64) -> Result<()> {
        self.check_compatible(psi)?;
        let dt = self.dt;
        let k = self.meas.k;
        let dx = self.grid.dx;

        if k > 0.0 {
            let amps = psi.amplitudes();
            let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let mean_x = amps
                .iter()
                .zip(&self.x)
                .map(|(a, x)| a.norm_sqr() * x)
                .sum::<f64>()
                / total;
            let var_x = amps
                .iter()
                .zip(&self.x)
                .map(|(a, x)| a.norm_sqr() * (x - mean_x).powi(2))
                .sum::<f64>()
                / total;
            if 8.0 * k * var_x * dt > 0.1 {
                return Err(Error::halt(format!(
                    "dt = {dt:e} does not resolve the measurement rate 8kσₓ² = {:e} at t = {t:e}",
                    8.0 * k * var_x
                )));
            }
            let gain = (2.0 * k).sqrt() * dw;
            for (a, x) in psi.amplitudes_mut().iter_mut().zip(&self.x) {
                let d = x - mean_x;
                *a *= (gain * d - 2.0 * k * d * d * dt).exp();
            }
            psi.normalize();
        }

        let before = psi.norm();
        let half = dt / (2.0 * self.hbar);
        let amps = psi.amplitudes_mut();
        for (a, x) in amps.iter_mut().zip(&self.x) {
            *a *= Complex64::from_polar(1.0, -self.sys.potential(*x, t) * half);
        }
        self.spec.forward(amps);
        for (a, u) in amps.iter_mut().zip(&self.kinetic) {
            *a *= u;
        }
        self.spec.inverse(amps);
        for (a, x) in amps.iter_mut().zip(&self.x) {
            *a *= Complex64::from_polar(1.0, -self.sys.potential(*x, t + dt) * half);
        }
        let after: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        if !after.is_finite() || (after - before).abs() > NORM_TOLERANCE * before {
            return Err(Error::halt(format!(
                "norm drift {:e} over the unitary step at t = {t:e} exceeds {NORM_TOLERANCE:e}",
                (after - before).abs() / before
            )));
        }
        psi.normalize();
        psi.check_boundary()
            .map_err(|e| Error::halt(format!("at t = {:e}: {e}", t + dt)))
    }
}

/// Single conditioned step; builds a throwaway [`SseStepper`], so prefer the
/// stepper for trajectories.
pub fn step_sse(
    sys: &SystemSpec,
    psi: &WaveFunction,
    t: f64,
    dt: f64,
    meas: &MeasurementConfig,
    noise: &mut NoiseSource,
) -> Result<WaveFunction> {
    let stepper = SseStepper::new(sys, *psi.grid(), psi.hbar(), dt, *meas)?;
    let mut out = psi.clone();
    stepper.step(&mut out, t, noise)?;
    Ok(out)
}
