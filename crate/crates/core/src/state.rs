use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A classical phase-space point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub p: f64,
}

impl PhaseState {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }
}

/// Centroid and second moments of a Gaussian Wigner function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    /// Symmetrized covariance ⟨xp + px⟩/2 − ⟨x⟩⟨p⟩.
    pub cov_xp: f64,
}

impl GaussianState {
    /// Pure (minimum-uncertainty) Gaussian with the given position variance and covariance.
    pub fn pure(mean_x: f64, mean_p: f64, var_x: f64, cov_xp: f64, hbar: f64) -> Self {
        Self {
            mean_x,
            mean_p,
            var_x,
            var_p: (hbar * hbar / 4.0 + cov_xp * cov_xp) / var_x,
            cov_xp,
        }
    }

    pub fn centroid(&self) -> PhaseState {
        PhaseState::new(self.mean_x, self.mean_p)
    }

    /// σ_x²σ_p² − C_xp², bounded below by ħ²/4 for quantum states.
    pub fn uncertainty_det(&self) -> f64 {
        self.var_x * self.var_p - self.cov_xp * self.cov_xp
    }

    pub fn is_finite(&self) -> bool {
        [self.mean_x, self.mean_p, self.var_x, self.var_p, self.cov_xp]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Checks positivity and the generalized uncertainty relation with
    /// additive slack `1e-6·ħ²`.
    pub fn check_quantum(&self, hbar: f64) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::halt(format!("non-finite moments {self:?}")));
        }
        if self.var_x <= 0.0 || self.var_p <= 0.0 {
            return Err(Error::halt(format!(
                "non-positive variance (var_x = {:e}, var_p = {:e})",
                self.var_x, self.var_p
            )));
        }
        let det = self.uncertainty_det();
        let bound = hbar * hbar / 4.0;
        if det < bound - 1e-6 * hbar * hbar {
            return Err(Error::halt(format!(
                "uncertainty relation violated: var_x·var_p − cov² = {det:e} < ħ²/4 = {bound:e}; \
                 reduce dt or check that k lies inside the validity window"
            )));
        }
        Ok(())
    }
}

/// Continuous position-measurement strength.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// k in µm⁻²·s⁻¹ (or the dimensionless equivalent); zero means unobserved.
    pub k: f64,
}

impl MeasurementConfig {
    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::invalid(format!(
                "measurement strength k must be finite and non-negative, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn unobserved() -> Self {
        Self { k: 0.0 }
    }

    pub fn is_observed(&self) -> bool {
        self.k > 0.0
    }
}
