//! Newtonian trajectories, with or without additive noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::SystemSpec;
use crate::state::PhaseState;

/// Diffusion coefficients of the additive noise driving a classical particle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassicalNoiseSpec {
    /// Momentum diffusion D_p: Var[Δp] = 2·D_p·Δt.
    pub d_p: f64,
    /// Position diffusion D_x: Var[Δx] = 2·D_x·Δt.
    pub d_x: f64,
}

impl ClassicalNoiseSpec {
    pub fn new(d_p: f64, d_x: f64) -> Result<Self> {
        if !(d_p.is_finite() && d_p >= 0.0 && d_x.is_finite() && d_x >= 0.0) {
            return Err(Error::invalid(format!(
                "diffusion coefficients must be non-negative, got D_p = {d_p}, D_x = {d_x}"
            )));
        }
        Ok(Self { d_p, d_x })
    }

    /// Noise matched to the measured quantum centroid at the free-particle
    /// steady state: D_p = ħ²k (half the 2ħ²k back-action rate) and
    /// D_x = 4k·σ̄ₓ⁴ with σ̄ₓ⁴ = ħ/(8km), i.e. D_x = ħ/(2m).
    pub fn matched(hbar: f64, k: f64, m: f64) -> Self {
        if k <= 0.0 {
            return Self::default();
        }
        let var_x_sq = hbar / (8.0 * k * m);
        Self {
            d_p: hbar * hbar * k,
            d_x: 4.0 * k * var_x_sq,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.d_p == 0.0 && self.d_x == 0.0
    }
}

fn derivative(sys: &SystemSpec, x: f64, p: f64, t: f64) -> (f64, f64) {
    (p / sys.mass(), sys.force(x, t))
}

fn rk4(sys: &SystemSpec, s: PhaseState, t: f64, dt: f64) -> PhaseState {
    let (k1x, k1p) = derivative(sys, s.x, s.p, t);
    let h = 0.5 * dt;
    let (k2x, k2p) = derivative(sys, s.x + h * k1x, s.p + h * k1p, t + h);
    let (k3x, k3p) = derivative(sys, s.x + h * k2x, s.p + h * k2p, t + h);
    let (k4x, k4p) = derivative(sys, s.x + dt * k3x, s.p + dt * k3p, t + dt);
    PhaseState {
        x: s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        p: s.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    }
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

fn check_state(s: PhaseState, t: f64) -> Result<PhaseState> {
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::halt(format!(
            "classical state became non-finite at t = {t:e} ({s:?})"
        )))
    }
}

/// One fixed-step RK4 advance of ẋ = p/m, ṗ = F(x, t).
pub fn step_newton(sys: &SystemSpec, s: PhaseState, t: f64, dt: f64) -> Result<PhaseState> {
    check_step(dt)?;
    check_state(s, t)?;
    check_state(rk4(sys, s, t, dt), t + dt)
}

/// One step of the noise-driven classical system.
///
/// The deterministic drift is advanced with the same RK4 step as
/// [`step_newton`]; the additive increments √(2D_x)ΔW_x and √(2D_p)ΔW_p are
/// then added, which for state-independent noise is the Euler–Maruyama noise
/// term. Two increments are drawn per step, x first.
pub fn step_noisy_classical(
    sys: &SystemSpec,
    s: PhaseState,
    t: f64,
    dt: f64,
    noise: &mut NoiseSource,
    nspec: &ClassicalNoiseSpec,
) -> Result<PhaseState> {
    check_step(dt)?;
    check_state(s, t)?;
    let mut next = rk4(sys, s, t, dt);
    let dw_x = noise.increment(dt);
    let dw_p = noise.increment(dt);
    next.x += (2.0 * nspec.d_x).sqrt() * dw_x;
    next.p += (2.0 * nspec.d_p).sqrt() * dw_p;
    check_state(next, t + dt)
}

/// Energy p²/2m + V(x, t).
pub fn energy(sys: &SystemSpec, s: PhaseState, t: f64) -> f64 {
    0.5 * s.p * s.p / sys.mass() + sys.potential(s.x, t)
}

/// Integrates `n_steps` fixed steps from `t0`, returning `(t, state)` rows
/// including the initial point. Times are `t0 + i·dt` exactly.
pub fn newton_trajectory(
    sys: &SystemSpec,
    start: PhaseState,
    t0: f64,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<(f64, PhaseState)>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut s = start;
    out.push((t0, s));
    for i in 0..n_steps {
        let t = t0 + i as f64 * dt;
        s = step_newton(sys, s, t, dt)?;
        out.push((t0 + (i + 1) as f64 * dt, s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn free_motion_is_exact() {
        let sys = SystemSpec::free_particle(2.0);
        let s = step_newton(&sys, PhaseState::new(1.0, 3.0), 0.0, 0.25).unwrap();
        assert_eq!(s, PhaseState::new(1.0 + 3.0 * 0.25 / 2.0, 3.0));
    }

    #[test]
    fn harmonic_returns_after_one_period() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let n = (TAU / 1e-4).round() as usize;
        let dt = TAU / n as f64;
        let traj = newton_trajectory(&sys, PhaseState::new(1.0, 0.0), 0.0, dt, n).unwrap();
        let end = traj.last().unwrap().1;
        assert!((end.x - 1.0).abs() < 1e-8 && end.p.abs() < 1e-8, "{end:?}");
    }

    #[test]
    fn double_well_energy_conserved() {
        let sys = SystemSpec::DoubleWell {
            m: 1.0,
            a: 990.0,
            b: 49_500.0,
        };
        let start = PhaseState::new(-0.098, 2.6);
        let period = sys.reference_period().unwrap();
        let dt = period / 1e4;
        let e0 = energy(&sys, start, 0.0);
        let traj = newton_trajectory(&sys, start, 0.0, dt, 100_000).unwrap();
        let worst = traj
            .iter()
            .map(|(t, s)| ((energy(&sys, *s, *t) - e0) / e0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "relative energy drift {worst:e}");
    }

    #[test]
    fn time_reversal_retraces() {
        let sys = SystemSpec::DoubleWell {
            m: 1.0,
            a: 990.0,
            b: 49_500.0,
        };
        let dt = 1e-5;
        let mut s = PhaseState::new(0.05, 1.0);
        for i in 0..20_000 {
            s = step_newton(&sys, s, i as f64 * dt, dt).unwrap();
        }
        s.p = -s.p;
        for i in 0..20_000 {
            s = step_newton(&sys, s, i as f64 * dt, dt).unwrap();
        }
        assert!((s.x - 0.05).abs() < 1e-9 && (s.p + 1.0).abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn zero_noise_matches_newton() {
        let sys = SystemSpec::paper_duffing();
        let mut noise = NoiseSource::new(3, 0);
        let spec = ClassicalNoiseSpec::default();
        let dt = TAU / 60.0 / 1e4;
        let (mut a, mut b) = (PhaseState::new(-0.098, 2.6), PhaseState::new(-0.098, 2.6));
        for i in 0..10_000 {
            let t = i as f64 * dt;
            a = step_newton(&sys, a, t, dt).unwrap();
            b = step_noisy_classical(&sys, b, t, dt, &mut noise, &spec).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn free_particle_momentum_diffuses() {
        let sys = SystemSpec::free_particle(1.0);
        let spec = ClassicalNoiseSpec::new(0.3, 0.0).unwrap();
        let (dt, steps, n) = (0.01, 100, 10_000);
        let t_end = dt * steps as f64;
        let finals: Vec<f64> = (0..n)
            .map(|r| {
                let mut noise = NoiseSource::new(17, r as u64);
                let mut s = PhaseState::default();
                for i in 0..steps {
                    s = step_noisy_classical(&sys, s, i as f64 * dt, dt, &mut noise, &spec)
                        .unwrap();
                }
                s.p
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / n as f64;
        let var = finals.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expected = 2.0 * spec.d_p * t_end;
        assert!((var - expected).abs() / expected < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn noisy_mean_converges_to_deterministic() {
        // Ensemble-mean error at fixed seeds shrinks as D is halved.
        let sys = SystemSpec::paper_duffing();
        let dt = TAU / 60.0 / 1000.0;
        let steps = 500;
        let mut reference = PhaseState::new(-0.098, 2.6);
        for i in 0..steps {
            reference = step_newton(&sys, reference, i as f64 * dt, dt).unwrap();
        }
        let mean_error = |d_p: f64| {
            let spec = ClassicalNoiseSpec::new(d_p, 0.0).unwrap();
            let n = 200;
            let mut acc = PhaseState::default();
            for r in 0..n {
                let mut noise = NoiseSource::new(23, r);
                let mut s = PhaseState::new(-0.098, 2.6);
                for i in 0..steps {
                    s = step_noisy_classical(&sys, s, i as f64 * dt, dt, &mut noise, &spec)
                        .unwrap();
                }
                acc.x += s.x / n as f64;
                acc.p += s.p / n as f64;
            }
            ((acc.x - reference.x) / 0.033).hypot((acc.p - reference.p) / 0.324)
        };
        let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3, 1.25e-3].iter().map(|&d| mean_error(d)).collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
    }

    #[test]
    fn matched_noise_values() {
        let spec = ClassicalNoiseSpec::matched(crate::units::HBAR, 9.3e13, 1.0);
        assert!((spec.d_p - crate::units::HBAR.powi(2) * 9.3e13).abs() < 1e-15);
        assert!((spec.d_x - crate::units::HBAR / 2.0).abs() < 1e-20);
    }
}
