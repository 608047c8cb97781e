use num_complex::Complex64;

use super::{Grid, Spectral};
use crate::error::{Error, Result};
use crate::potentials::SystemSpec;
use crate::state::GaussianState;

/// Fraction of the grid at each edge that must stay empty.
pub const EDGE_FRACTION: f64 = 0.05;
/// Largest probability allowed in the edge regions.
pub const EDGE_TOLERANCE: f64 = 1e-8;

/// Conditioned pure state on a uniform grid, normalized so Σ|ψ_j|²dx = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    hbar: f64,
    amps: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps and normalizes raw amplitudes.
    pub fn from_amplitudes(grid: Grid, hbar: f64, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.n {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                grid.n,
                amps.len()
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid(format!("ħ must be positive, got {hbar}")));
        }
        let mut psi = Self { grid, hbar, amps };
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("wavefunction has zero or non-finite norm"));
        }
        psi.normalize();
        Ok(psi)
    }

    /// Pure Gaussian with the given centroid, position variance and
    /// position–momentum covariance; σ_p² = (ħ²/4 + C²)/σₓ².
    pub fn gaussian(
        grid: Grid,
        hbar: f64,
        mean_x: f64,
        mean_p: f64,
        var_x: f64,
        cov_xp: f64,
    ) -> Result<Self> {
        if !(var_x > 0.0) {
            return Err(Error::invalid(format!("σₓ² must be positive, got {var_x}")));
        }
        let width = 1.0 / (4.0 * var_x);
        let chirp = cov_xp / (2.0 * hbar * var_x);
        let amps = (0..grid.n)
            .map(|j| {
                let d = grid.x(j) - mean_x;
                let phase = chirp * d * d + mean_p * d / hbar;
                Complex64::from_polar((-width * d * d).exp(), phase)
            })
            .collect();
        Self::from_amplitudes(grid, hbar, amps)
    }

    /// Pure Gaussian matching the centroid, σₓ² and C_xp of `g`.
    pub fn from_gaussian_state(grid: Grid, hbar: f64, g: &GaussianState) -> Result<Self> {
        Self::gaussian(grid, hbar, g.mean_x, g.mean_p, g.var_x, g.cov_xp)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub(crate) fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// |ψ(x_j)|².
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Momentum density on the FFT-ordered momentum grid, normalized so that
    /// Σ ρ(p_j)·Δp = 1.
    pub fn momentum_density(&self) -> Vec<f64> {
        let spec = Spectral::new(self.grid.n);
        let mut phi = self.amps.clone();
        spec.forward(&mut phi);
        let dp = self.hbar * std::f64::consts::TAU / self.grid.length();
        let total: f64 = phi.iter().map(|a| a.norm_sqr()).sum::<f64>() * dp;
        phi.iter().map(|a| a.norm_sqr() / total).collect()
    }

    /// Probability in the outer `EDGE_FRACTION` of the grid at both ends.
    pub fn edge_probability(&self) -> f64 {
        let m = ((self.grid.n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
        let n = self.grid.n;
        let edge: f64 = self.amps[..m]
            .iter()
            .chain(&self.amps[n - m..])
            .map(|a| a.norm_sqr())
            .sum();
        edge * self.grid.dx
    }

    /// Halts if the state has reached the grid edges.
    pub fn check_boundary(&self) -> Result<()> {
        let leak = self.edge_probability();
        if leak >= EDGE_TOLERANCE || !leak.is_finite() {
            return Err(Error::halt(format!(
                "boundary leakage {leak:e} exceeds {EDGE_TOLERANCE:e}: \
                 enlarge the grid range [{:e}, {:e})",
                self.grid.x_min,
                self.grid.x_min + self.grid.length()
            )));
        }
        Ok(())
    }

    /// Centroid, variances and symmetrized covariance; momentum moments are
    /// computed spectrally.
    pub fn moments(&self) -> GaussianState {
        let spec = Spectral::new(self.grid.n);
        self.moments_with(&spec)
    }

    pub(crate) fn moments_with(&self, spec: &Spectral) -> GaussianState {
        let dx = self.grid.dx;
        let rho = self.density();
        let norm: f64 = rho.iter().sum::<f64>() * dx;
        let mean_x = rho
            .iter()
            .enumerate()
            .map(|(j, r)| r * self.grid.x(j))
            .sum::<f64>()
            * dx
            / norm;
        let var_x = rho
            .iter()
            .enumerate()
            .map(|(j, r)| r * (self.grid.x(j) - mean_x).powi(2))
            .sum::<f64>()
            * dx
            / norm;

        let kappa = super::wavenumbers(self.grid.n, dx);
        let mut phi = self.amps.clone();
        spec.forward(&mut phi);
        let weight: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
        let mean_k = phi
            .iter()
            .zip(&kappa)
            .map(|(a, k)| a.norm_sqr() * k)
            .sum::<f64>()
            / weight;
        let var_k = phi
            .iter()
            .zip(&kappa)
            .map(|(a, k)| a.norm_sqr() * (k - mean_k).powi(2))
            .sum::<f64>()
            / weight;

        // Re⟨(x − ⟨x⟩)(p̂ − ⟨p⟩)⟩ from −iħ∂ₓψ
        for (a, k) in phi.iter_mut().zip(&kappa) {
            *a *= Complex64::new(0.0, *k);
        }
        spec.inverse(&mut phi);
        let mean_p = self.hbar * mean_k;
        let cov = self
            .amps
            .iter()
            .zip(&phi)
            .enumerate()
            .map(|(j, (a, d))| {
                let p_psi = Complex64::new(0.0, -self.hbar) * d - mean_p * a;
                (a.conj() * p_psi).re * (self.grid.x(j) - mean_x)
            })
            .sum::<f64>()
            * dx
            / norm;

        GaussianState {
            mean_x,
            mean_p,
            var_x,
            var_p: self.hbar * self.hbar * var_k,
            cov_xp: cov,
        }
    }

    /// Translates the state by `dx` (spectrally) and boosts it by `dp`.
    pub fn displace(&mut self, dx: f64, dp: f64) {
        if dx != 0.0 {
            let spec = Spectral::new(self.grid.n);
            spec.forward(&mut self.amps);
            for (a, k) in self
                .amps
                .iter_mut()
                .zip(super::wavenumbers(self.grid.n, self.grid.dx))
            {
                *a *= Complex64::from_polar(1.0, -k * dx);
            }
            spec.inverse(&mut self.amps);
        }
        if dp != 0.0 {
            for (j, a) in self.amps.iter_mut().enumerate() {
                *a *= Complex64::from_polar(1.0, dp * self.grid.x(j) / self.hbar);
            }
        }
    }

    /// ⟨p̂²/2m + V(x, t)⟩.
    pub fn energy(&self, sys: &SystemSpec, t: f64) -> f64 {
        let spec = Spectral::new(self.grid.n);
        let mut phi = self.amps.clone();
        spec.forward(&mut phi);
        let kappa = super::wavenumbers(self.grid.n, self.grid.dx);
        let weight: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
        let kinetic = phi
            .iter()
            .zip(&kappa)
            .map(|(a, k)| a.norm_sqr() * (self.hbar * k).powi(2))
            .sum::<f64>()
            / weight
            / (2.0 * sys.mass());
        let potential = self
            .amps
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * sys.potential(self.grid.x(j), t))
            .sum::<f64>()
            * self.grid.dx
            / self.norm();
        kinetic + potential
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(-10.0, 10.0, 512).unwrap()
    }

    #[test]
    fn minimum_uncertainty_moments() {
        let hbar = 0.7;
        let psi = WaveFunction::gaussian(grid(), hbar, 1.5, 0.0, 0.4, 0.0).unwrap();
        let g = psi.moments();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((g.mean_x - 1.5).abs() < 1e-10);
        assert!(g.mean_p.abs() < 1e-10);
        assert!(g.cov_xp.abs() < 1e-10);
        assert!((g.var_x - 0.4).abs() < 1e-10);
        assert!((g.var_x * g.var_p - hbar * hbar / 4.0).abs() < 1e-10);
    }

    #[test]
    fn boost_shifts_mean_momentum() {
        let psi = WaveFunction::gaussian(grid(), 0.5, 0.0, 3.25, 0.3, 0.0).unwrap();
        assert!((psi.moments().mean_p - 3.25).abs() < 1e-8);
    }

    #[test]
    fn chirp_sets_covariance() {
        let hbar = 0.5;
        let psi = WaveFunction::gaussian(grid(), hbar, -0.5, 1.0, 0.5, 0.3).unwrap();
        let g = psi.moments();
        assert!((g.cov_xp - 0.3).abs() < 1e-9, "{g:?}");
        assert!((g.var_p - (hbar * hbar / 4.0 + 0.09) / 0.5).abs() < 1e-9);
        assert!((g.uncertainty_det() - hbar * hbar / 4.0).abs() < 1e-9);
    }

    #[test]
    fn momentum_density_normalized() {
        let psi = WaveFunction::gaussian(grid(), 0.5, 0.0, 1.0, 0.3, 0.1).unwrap();
        let dp = 0.5 * std::f64::consts::TAU / grid().length();
        let total: f64 = psi.momentum_density().iter().sum::<f64>() * dp;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_shifts_centroid() {
        let mut psi = WaveFunction::gaussian(grid(), 0.5, 0.2, 0.1, 0.3, 0.05).unwrap();
        let before = psi.moments();
        psi.displace(0.37, -0.8);
        let after = psi.moments();
        assert!((after.mean_x - before.mean_x - 0.37).abs() < 1e-10);
        assert!((after.mean_p - before.mean_p + 0.8).abs() < 1e-10);
        assert!((after.var_x - before.var_x).abs() < 1e-10);
        assert!((after.cov_xp - before.cov_xp).abs() < 1e-10);
    }

    #[test]
    fn leakage_detected() {
        let psi = WaveFunction::gaussian(grid(), 1.0, 9.0, 0.0, 0.5, 0.0).unwrap();
        assert!(psi.check_boundary().is_err());
        let psi = WaveFunction::gaussian(grid(), 1.0, 0.0, 0.0, 0.5, 0.0).unwrap();
        assert!(psi.check_boundary().is_ok());
    }

    #[test]
    fn harmonic_ground_state_energy() {
        let sys = SystemSpec::Harmonic { m: 2.0, w0: 1.5 };
        let hbar = 0.8;
        let var = hbar / (2.0 * 2.0 * 1.5);
        let psi = WaveFunction::gaussian(grid(), hbar, 0.0, 0.0, var, 0.0).unwrap();
        assert!((psi.energy(&sys, 0.0) - 0.5 * hbar * 1.5).abs() < 1e-10);
    }
}
