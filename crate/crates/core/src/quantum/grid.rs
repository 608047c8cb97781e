use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic position grid `x_min + j·dx`, `j = 0..n`, with `n` a
/// power of two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    /// `n` points covering `[x_min, x_max)`.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::invalid(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(format!(
                "grid range must satisfy x_min < x_max, got [{x_min}, {x_max})"
            )));
        }
        Ok(Self {
            x_min,
            dx: (x_max - x_min) / n as f64,
            n,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Largest momentum representable on the grid, πħ/dx.
    pub fn p_max(&self, hbar: f64) -> f64 {
        std::f64::consts::PI * hbar / self.dx
    }

    /// Momenta ħκ in FFT order.
    pub fn momenta(&self, hbar: f64) -> Vec<f64> {
        super::wavenumbers(self.n, self.dx)
            .into_iter()
            .map(|k| hbar * k)
            .collect()
    }
}
