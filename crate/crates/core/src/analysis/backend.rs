//! A uniform stepping interface over every evolution engine.

use crate::classical::{step_newton, step_noisy_classical, ClassicalNoiseSpec};
use crate::closure::{step_gaussian_closure, steady_state_variances};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::SystemSpec;
use crate::quantum::{wigner_transform, Grid, SseStepper, WaveFunction, WignerGrid, WignerStepper};
use crate::state::{GaussianState, MeasurementConfig, PhaseState};

/// Fixed-step evolution of some state whose centroid is a phase-space point.
pub trait Backend: Sync {
    type State: Clone + Send;

    fn name(&self) -> &'static str;
    fn system(&self) -> &SystemSpec;
    fn dt(&self) -> f64;
    /// Whether steps consume noise; neighbours of stochastic backends are
    /// generated by switching the noise stream.
    fn stochastic(&self) -> bool;
    /// Initial state centred on `start`.
    fn prepare(&self, start: PhaseState) -> Result<Self::State>;
    fn step(&self, s: &mut Self::State, t: f64, noise: &mut NoiseSource) -> Result<()>;
    fn phase_point(&self, s: &Self::State) -> PhaseState;
    /// Second moments, for backends that carry them.
    fn moments(&self, _s: &Self::State) -> Option<GaussianState> {
        None
    }
    fn displace(&self, s: &mut Self::State, dx: f64, dp: f64) -> Result<()>;
}

/// Noise-free Newtonian trajectories.
#[derive(Clone, Debug)]
pub struct ClassicalBackend {
    pub sys: SystemSpec,
    pub dt: f64,
}

impl Backend for ClassicalBackend {
    type State = PhaseState;

    fn name(&self) -> &'static str {
        "classical"
    }
    fn system(&self) -> &SystemSpec {
        &self.sys
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn stochastic(&self) -> bool {
        false
    }
    fn prepare(&self, start: PhaseState) -> Result<PhaseState> {
        Ok(start)
    }
    fn step(&self, s: &mut PhaseState, t: f64, _noise: &mut NoiseSource) -> Result<()> {
        *s = step_newton(&self.sys, *s, t, self.dt)?;
        Ok(())
    }
    fn phase_point(&self, s: &PhaseState) -> PhaseState {
        *s
    }
    fn displace(&self, s: &mut PhaseState, dx: f64, dp: f64) -> Result<()> {
        s.x += dx;
        s.p += dp;
        Ok(())
    }
}

/// Newtonian trajectories with additive noise.
#[derive(Clone, Debug)]
pub struct NoisyClassicalBackend {
    pub sys: SystemSpec,
    pub dt: f64,
    pub noise: ClassicalNoiseSpec,
}

impl Backend for NoisyClassicalBackend {
    type State = PhaseState;

    fn name(&self) -> &'static str {
        "noisy-classical"
    }
    fn system(&self) -> &SystemSpec {
        &self.sys
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn stochastic(&self) -> bool {
        !self.noise.is_zero()
    }
    fn prepare(&self, start: PhaseState) -> Result<PhaseState> {
        Ok(start)
    }
    fn step(&self, s: &mut PhaseState, t: f64, noise: &mut NoiseSource) -> Result<()> {
        *s = step_noisy_classical(&self.sys, *s, t, self.dt, noise, &self.noise)?;
        Ok(())
    }
    fn phase_point(&self, s: &PhaseState) -> PhaseState {
        *s
    }
    fn displace(&self, s: &mut PhaseState, dx: f64, dp: f64) -> Result<()> {
        s.x += dx;
        s.p += dp;
        Ok(())
    }
}

/// Initial second moments for the quantum backends: the steady state with
/// ∂ₓF frozen at the start when measured, otherwise a pure Gaussian of the
/// local harmonic width.
pub fn default_initial_moments(
    sys: &SystemSpec,
    start: PhaseState,
    meas: &MeasurementConfig,
    hbar: f64,
) -> GaussianState {
    let m = sys.mass();
    if meas.is_observed() {
        let d_force = sys.force_derivatives(start.x, 0.0).d_force;
        let ss = steady_state_variances(m, d_force, meas, hbar)
            .or_else(|_| steady_state_variances(m, 0.0, meas, hbar));
        if let Ok(ss) = ss {
            return GaussianState {
                mean_x: start.x,
                mean_p: start.p,
                var_x: ss.var_x,
                var_p: ss.var_p,
                cov_xp: ss.cov_xp,
            };
        }
    }
    let omega = sys
        .reference_period()
        .map(|t| std::f64::consts::TAU / t)
        .unwrap_or(1.0);
    GaussianState::pure(start.x, start.p, hbar / (2.0 * m * omega), 0.0, hbar)
}

/// Gaussian moment closure of the conditioned Wigner function.
#[derive(Clone, Debug)]
pub struct ClosureBackend {
    pub sys: SystemSpec,
    pub dt: f64,
    pub meas: MeasurementConfig,
    pub hbar: f64,
    /// Overrides the initial (σₓ², σ_p², C_xp); centroid comes from `prepare`.
    pub initial: Option<GaussianState>,
}

impl Backend for ClosureBackend {
    type State = GaussianState;

    fn name(&self) -> &'static str {
        "closure"
    }
    fn system(&self) -> &SystemSpec {
        &self.sys
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn stochastic(&self) -> bool {
        self.meas.is_observed()
    }
    fn prepare(&self, start: PhaseState) -> Result<GaussianState> {
        let mut g = self
            .initial
            .unwrap_or_else(|| default_initial_moments(&self.sys, start, &self.meas, self.hbar));
        g.mean_x = start.x;
        g.mean_p = start.p;
        g.check_quantum(self.hbar)?;
        Ok(g)
    }
    fn step(&self, s: &mut GaussianState, t: f64, noise: &mut NoiseSource) -> Result<()> {
        *s = step_gaussian_closure(&self.sys, s, t, self.dt, &self.meas, self.hbar, noise)?;
        Ok(())
    }
    fn phase_point(&self, s: &GaussianState) -> PhaseState {
        s.centroid()
    }
    fn moments(&self, s: &GaussianState) -> Option<GaussianState> {
        Some(*s)
    }
    fn displace(&self, s: &mut GaussianState, dx: f64, dp: f64) -> Result<()> {
        s.mean_x += dx;
        s.mean_p += dp;
        Ok(())
    }
}

/// Conditioned wavefunction on a grid.
pub struct SseBackend {
    pub sys: SystemSpec,
    pub stepper: SseStepper,
    pub initial: Option<GaussianState>,
}

impl SseBackend {
    pub fn new(
        sys: &SystemSpec,
        grid: Grid,
        hbar: f64,
        dt: f64,
        meas: MeasurementConfig,
        initial: Option<GaussianState>,
    ) -> Result<Self> {
        Ok(Self {
            sys: *sys,
            stepper: SseStepper::new(sys, grid, hbar, dt, meas)?,
            initial,
        })
    }
}

impl Backend for SseBackend {
    type State = WaveFunction;

    fn name(&self) -> &'static str {
        "sse"
    }
    fn system(&self) -> &SystemSpec {
        &self.sys
    }
    fn dt(&self) -> f64 {
        self.stepper.dt()
    }
    fn stochastic(&self) -> bool {
        self.stepper.measurement().is_observed()
    }
    fn prepare(&self, start: PhaseState) -> Result<WaveFunction> {
        let hbar = self.stepper.hbar();
        let mut g = self.initial.unwrap_or_else(|| {
            default_initial_moments(&self.sys, start, self.stepper.measurement(), hbar)
        });
        g.mean_x = start.x;
        g.mean_p = start.p;
        let psi = WaveFunction::from_gaussian_state(*self.stepper.grid(), hbar, &g)?;
        psi.check_boundary()?;
        Ok(psi)
    }
    fn step(&self, s: &mut WaveFunction, t: f64, noise: &mut NoiseSource) -> Result<()> {
        self.stepper.step(s, t, noise)
    }
    fn phase_point(&self, s: &WaveFunction) -> PhaseState {
        s.moments().centroid()
    }
    fn moments(&self, s: &WaveFunction) -> Option<GaussianState> {
        Some(s.moments())
    }
    fn displace(&self, s: &mut WaveFunction, dx: f64, dp: f64) -> Result<()> {
        s.displace(dx, dp);
        s.check_boundary()
    }
}

/// Direct phase-space integration of the Wigner function.
pub struct WignerBackend {
    pub sys: SystemSpec,
    pub grid: Grid,
    pub hbar: f64,
    pub meas: MeasurementConfig,
    pub stepper: WignerStepper,
    pub initial: Option<GaussianState>,
}

impl WignerBackend {
    pub fn new(
        sys: &SystemSpec,
        grid: Grid,
        hbar: f64,
        dt: f64,
        meas: MeasurementConfig,
        initial: Option<GaussianState>,
    ) -> Result<Self> {
        let centre = grid.x_min + 0.5 * grid.length();
        let probe = WaveFunction::gaussian(grid, hbar, centre, 0.0, (4.0 * grid.dx).powi(2), 0.0)?;
        let template = wigner_transform(&probe, grid.n)?;
        Ok(Self {
            sys: *sys,
            grid,
            hbar,
            meas,
            stepper: WignerStepper::new(sys, &template, dt, meas)?,
            initial,
        })
    }
}

impl Backend for WignerBackend {
    type State = WignerGrid;

    fn name(&self) -> &'static str {
        "wigner-grid"
    }
    fn system(&self) -> &SystemSpec {
        &self.sys
    }
    fn dt(&self) -> f64 {
        self.stepper.dt()
    }
    fn stochastic(&self) -> bool {
        self.meas.is_observed()
    }
    fn prepare(&self, start: PhaseState) -> Result<WignerGrid> {
        let mut g = self
            .initial
            .unwrap_or_else(|| default_initial_moments(&self.sys, start, &self.meas, self.hbar));
        g.mean_x = start.x;
        g.mean_p = start.p;
        let psi = WaveFunction::from_gaussian_state(self.grid, self.hbar, &g)?;
        psi.check_boundary()?;
        wigner_transform(&psi, self.grid.n)
    }
    fn step(&self, s: &mut WignerGrid, t: f64, noise: &mut NoiseSource) -> Result<()> {
        self.stepper.step(s, t, noise)
    }
    fn phase_point(&self, s: &WignerGrid) -> PhaseState {
        s.moments().centroid()
    }
    fn moments(&self, s: &WignerGrid) -> Option<GaussianState> {
        Some(s.moments())
    }
    fn displace(&self, _s: &mut WignerGrid, _dx: f64, _dp: f64) -> Result<()> {
        Err(Error::invalid(
            "the Wigner-grid backend does not support displaced neighbours",
        ))
    }
}
