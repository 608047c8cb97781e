//! Conditioned quantum evolution on a position grid, and its Wigner-function
//! counterpart on a phase-space grid.

mod grid;
mod sse;
mod wavefunction;
mod wigner;

pub use grid::Grid;
pub use sse::{step_sse, SseStepper};
pub use wavefunction::WaveFunction;
pub use wigner::{step_wigner, wigner_transform, WignerGrid, WignerStepper};

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair of a fixed length; the inverse is normalized.
#[derive(Clone)]
pub(crate) struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Spectral {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scale: 1.0 / n as f64,
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

/// Angular wavenumbers of an `n`-point periodic grid of spacing `dx`, in FFT order.
pub(crate) fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let base = std::f64::consts::TAU / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let j = j as f64;
            if j < n as f64 / 2.0 {
                j * base
            } else {
                (j - n as f64) * base
            }
        })
        .collect()
}
