use num_complex::Complex64;
use rayon::prelude::*;

use super::{Spectral, WaveFunction};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::SystemSpec;
use crate::state::{GaussianState, MeasurementConfig};

/// Real phase-space pseudoprobability on a uniform (x, p) grid.
///
/// Values are stored row-major with one row per position, so
/// `value(i, j)` is f_W(x_i, p_j).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    x: Vec<f64>,
    p: Vec<f64>,
    values: Vec<f64>,
    hbar: f64,
}

fn uniform(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + i as f64 * step).collect()
}

impl WignerGrid {
    /// Builds a grid from axis origins, spacings and row-major values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x_min: f64,
        dx: f64,
        p_min: f64,
        dp: f64,
        n_x: usize,
        n_p: usize,
        values: Vec<f64>,
        hbar: f64,
    ) -> Result<Self> {
        if values.len() != n_x * n_p {
            return Err(Error::invalid(format!(
                "expected {} Wigner values, got {}",
                n_x * n_p,
                values.len()
            )));
        }
        if !(dx > 0.0 && dp > 0.0 && hbar > 0.0) {
            return Err(Error::invalid("Wigner grid spacings and ħ must be positive"));
        }
        Ok(Self {
            x: uniform(x_min, dx, n_x),
            p: uniform(p_min, dp, n_p),
            values,
            hbar,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_p(&self) -> usize {
        self.p.len()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_p() + j]
    }

    fn cell(&self) -> f64 {
        self.dx() * self.dp()
    }

    /// Σ f_W Δx Δp.
    pub fn norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// Position density ∫ f_W dp.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dp = self.dp();
        self.values
            .chunks(self.n_p())
            .map(|row| row.iter().sum::<f64>() * dp)
            .collect()
    }

    /// Momentum density ∫ f_W dx.
    pub fn marginal_p(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut out = vec![0.0; self.n_p()];
        for row in self.values.chunks(self.n_p()) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * dx;
            }
        }
        out
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Σ|f − g|ΔxΔp on a shared grid.
    pub fn l1_distance(&self, other: &WignerGrid) -> Result<f64> {
        if self.x != other.x || self.p != other.p {
            return Err(Error::invalid("Wigner grids differ"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.cell())
    }

    /// Σ|f|ΔxΔp.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell()
    }

    /// Centroid and second moments; C_xp = ∫xp f_W − ⟨x⟩⟨p⟩ is already the
    /// symmetrized covariance.
    pub fn moments(&self) -> GaussianState {
        let n_p = self.n_p();
        let (mut s, mut sx, mut sp) = (0.0, 0.0, 0.0);
        for (i, row) in self.values.chunks(n_p).enumerate() {
            for (j, v) in row.iter().enumerate() {
                s += v;
                sx += v * self.x[i];
                sp += v * self.p[j];
            }
        }
        let (mx, mp) = (sx / s, sp / s);
        let (mut vxx, mut vpp, mut vxp) = (0.0, 0.0, 0.0);
        for (i, row) in self.values.chunks(n_p).enumerate() {
            let dx = self.x[i] - mx;
            for (j, v) in row.iter().enumerate() {
                let dp = self.p[j] - mp;
                vxx += v * dx * dx;
                vpp += v * dp * dp;
                vxp += v * dx * dp;
            }
        }
        GaussianState {
            mean_x: mx,
            mean_p: mp,
            var_x: vxx / s,
            var_p: vpp / s,
            cov_xp: vxp / s,
        }
    }

    fn renormalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::halt(format!("Wigner norm became {norm:e}")));
        }
        for v in &mut self.values {
            *v /= norm;
        }
        Ok(())
    }
}

/// Discrete Wigner transform of `psi`, keeping the `p_count` momentum rows
/// around p = 0.
///
/// The wavefunction is first interpolated spectrally onto a grid of spacing
/// dx/2, so that ψ*(x_j + y)ψ(x_j − y) is available for y = n·dx/2; the sum
/// over n is then a length-N FFT, giving momentum spacing 2πħ/(N·dx).
pub fn wigner_transform(psi: &WaveFunction, p_count: usize) -> Result<WignerGrid> {
    let grid = *psi.grid();
    let n = grid.n;
    if p_count == 0 || p_count > n || p_count % 2 != 0 {
        return Err(Error::invalid(format!(
            "p_count must be even and in 1..={n}, got {p_count}"
        )));
    }
    let hbar = psi.hbar();

    let mut spectrum = psi.amplitudes().to_vec();
    Spectral::new(n).forward(&mut spectrum);
    let mut fine = vec![Complex64::new(0.0, 0.0); 2 * n];
    let half = n / 2;
    fine[..half].copy_from_slice(&spectrum[..half]);
    fine[2 * n - half + 1..].copy_from_slice(&spectrum[half + 1..]);
    fine[half] = 0.5 * spectrum[half];
    fine[2 * n - half] = 0.5 * spectrum[half];
    Spectral::new(2 * n).inverse(&mut fine);
    for v in &mut fine {
        *v *= 2.0;
    }

    let spec = Spectral::new(n);
    let prefactor = grid.dx * n as f64 / (std::f64::consts::TAU * hbar);
    let two_n = 2 * n as isize;
    let mut values = vec![0.0; n * p_count];
    values
        .par_chunks_mut(p_count)
        .enumerate()
        .for_each(|(j, row)| {
            let centre = 2 * j as isize;
            let mut buf: Vec<Complex64> = (0..n)
                .map(|idx| {
                    let s = if idx < half {
                        idx as isize
                    } else {
                        idx as isize - n as isize
                    };
                    let a = fine[(centre + s).rem_euclid(two_n) as usize];
                    let b = fine[(centre - s).rem_euclid(two_n) as usize];
                    a.conj() * b
                })
                .collect();
            spec.inverse(&mut buf);
            for (r, out) in row.iter_mut().enumerate() {
                let kk = r as isize - (p_count / 2) as isize;
                *out = prefactor * buf[kk.rem_euclid(n as isize) as usize].re;
            }
        });

    let dp = std::f64::consts::TAU * hbar / grid.length();
    WignerGrid::new(
        grid.x_min,
        grid.dx,
        -((p_count / 2) as f64) * dp,
        dp,
        n,
        p_count,
        values,
        hbar,
    )
}

/// Direct integrator of the stochastic Liouville equation on a phase-space grid
///
/// ```text
/// ∂f/∂t = −(p/m)∂ₓf − F∂_pf − (ħ²/24)∂ₓ³V ∂_p³f + ħ²k ∂_p²f
///        + √(8k)(x − ⟨x⟩) f ξ(t)
/// ```
///
/// For potentials of degree ≤ 4 the ħ² term is the only quantum correction.
/// A step applies the conditioning factor exp(√(8k)X·dW − 4kX²dt), then a
/// Strang split of the x-advection (half), the p-operator (full) and the
/// x-advection (half); both sub-flows have constant coefficients along the
/// transformed axis and are applied exactly as Fourier multipliers.
pub struct WignerStepper {
    sys: SystemSpec,
    dt: f64,
    meas: MeasurementConfig,
    hbar: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    kx: Vec<f64>,
    kp: Vec<f64>,
    spec_x: Spectral,
    spec_p: Spectral,
}

impl WignerStepper {
    /// Stepper for grids shaped like `template`.
    pub fn new(
        sys: &SystemSpec,
        template: &WignerGrid,
        dt: f64,
        meas: MeasurementConfig,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(template.n_x().is_power_of_two() && template.n_p().is_power_of_two()) {
            return Err(Error::invalid("Wigner grid sizes must be powers of two"));
        }
        sys.validate()?;
        Ok(Self {
            sys: *sys,
            dt,
            meas,
            hbar: template.hbar,
            x: template.x.clone(),
            p: template.p.clone(),
            kx: super::wavenumbers(template.n_x(), template.dx()),
            kp: super::wavenumbers(template.n_p(), template.dp()),
            spec_x: Spectral::new(template.n_x()),
            spec_p: Spectral::new(template.n_p()),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `w` from `t` to `t + dt`, drawing dW from `noise` when k > 0.
    pub fn step(&self, w: &mut WignerGrid, t: f64, noise: &mut NoiseSource) -> Result<()> {
        let dw = if self.meas.is_observed() {
            noise.increment(self.dt)
        } else {
            0.0
        };
        self.step_with(w, t, dw)
    }

    /// Advances `w` from `t` to `t + dt` with the given Wiener increment.
    pub fn step_with(&self, w: &mut WignerGrid, t: f64, dw: f64) -> Result<()> {
        if w.x != self.x || w.p != self.p || w.hbar != self.hbar {
            return Err(Error::invalid("Wigner grid differs from the stepper's"));
        }
        let (n_x, n_p) = (w.n_x(), w.n_p());
        let k = self.meas.k;
        let dt = self.dt;

        if k > 0.0 {
            let mean_x = w.moments().mean_x;
            let gain = (8.0 * k).sqrt() * dw;
            for (row, x) in w.values.chunks_mut(n_p).zip(&self.x) {
                let d = x - mean_x;
                let factor = (gain * d - 4.0 * k * d * d * dt).exp();
                for v in row {
                    *v *= factor;
                }
            }
            w.renormalize()?;
        }
        let before = w.norm();

        // rows indexed by p for the x-advection
        let mut cols = vec![Complex64::new(0.0, 0.0); n_x * n_p];
        for i in 0..n_x {
            for j in 0..n_p {
                cols[j * n_x + i] = Complex64::new(w.values[i * n_p + j], 0.0);
            }
        }
        self.advect_x(&mut cols, 0.5 * dt);
        let mut rows = vec![Complex64::new(0.0, 0.0); n_x * n_p];
        for i in 0..n_x {
            for j in 0..n_p {
                rows[i * n_p + j] = cols[j * n_x + i];
            }
        }

        let t_mid = t + 0.5 * dt;
        let hbar2 = self.hbar * self.hbar;
        rows.par_chunks_mut(n_p)
            .zip(self.x.par_iter())
            .for_each(|(row, &x)| {
                let force = self.sys.force(x, t_mid);
                let d3v = self.sys.force_derivatives(x, t_mid).d3_potential;
                self.spec_p.forward(row);
                for (v, &q) in row.iter_mut().zip(&self.kp) {
                    let phase = -q * force + hbar2 / 24.0 * d3v * q * q * q;
                    let decay = -hbar2 * k * q * q;
                    *v *= Complex64::from_polar((decay * dt).exp(), phase * dt);
                }
                self.spec_p.inverse(row);
            });

        for i in 0..n_x {
            for j in 0..n_p {
                cols[j * n_x + i] = rows[i * n_p + j];
            }
        }
        self.advect_x(&mut cols, 0.5 * dt);
        for i in 0..n_x {
            for j in 0..n_p {
                w.values[i * n_p + j] = cols[j * n_x + i].re;
            }
        }

        let after = w.norm();
        if !after.is_finite() || (after - before).abs() > 1e-6 * before.abs() {
            return Err(Error::halt(format!(
                "Wigner norm drift {:e} at t = {t:e}",
                (after - before) / before
            )));
        }
        w.renormalize()
    }

    fn advect_x(&self, cols: &mut [Complex64], tau: f64) {
        let n_x = self.x.len();
        let m = self.sys.mass();
        cols.par_chunks_mut(n_x)
            .zip(self.p.par_iter())
            .for_each(|(col, &p)| {
                self.spec_x.forward(col);
                for (v, &q) in col.iter_mut().zip(&self.kx) {
                    *v *= Complex64::from_polar(1.0, -q * p * tau / m);
                }
                self.spec_x.inverse(col);
            });
    }
}

/// Single Wigner-grid step; builds a throwaway [`WignerStepper`].
pub fn step_wigner(
    sys: &SystemSpec,
    w: &WignerGrid,
    t: f64,
    dt: f64,
    meas: &MeasurementConfig,
    noise: &mut NoiseSource,
) -> Result<WignerGrid> {
    let stepper = WignerStepper::new(sys, w, dt, *meas)?;
    let mut out = w.clone();
    stepper.step(&mut out, t, noise)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Grid, SseStepper};
    use std::f64::consts::{PI, TAU};

    fn grid() -> Grid {
        Grid::new(-8.0, 8.0, 256).unwrap()
    }

    #[test]
    fn gaussian_transform_is_analytic() {
        let hbar = 0.5;
        let (x0, p0, var) = (0.7, -1.1, 0.3);
        let psi = WaveFunction::gaussian(grid(), hbar, x0, p0, var, 0.0).unwrap();
        let w = wigner_transform(&psi, 256).unwrap();
        let mut worst = 0.0_f64;
        for (i, &x) in w.x().iter().enumerate() {
            for (j, &p) in w.p().iter().enumerate() {
                let exact = (-(x - x0).powi(2) / (2.0 * var)
                    - 2.0 * var * (p - p0).powi(2) / (hbar * hbar))
                    .exp()
                    / (PI * hbar);
                worst = worst.max((w.value(i, j) - exact).abs());
            }
        }
        assert!(worst < 1e-10, "{worst:e}");
        let g = w.moments();
        assert!((g.var_x - var).abs() < 1e-9);
        assert!((g.var_p - hbar * hbar / (4.0 * var)).abs() < 1e-9);
        assert!(g.cov_xp.abs() < 1e-9);
        assert!((w.norm() - 1.0).abs() < 1e-10);
    }

    fn cat(a: f64, hbar: f64) -> WaveFunction {
        let g = grid();
        let left = WaveFunction::gaussian(g, hbar, -a, 0.0, 0.1, 0.0).unwrap();
        let right = WaveFunction::gaussian(g, hbar, a, 0.3, 0.1, 0.0).unwrap();
        let amps = left
            .amplitudes()
            .iter()
            .zip(right.amplitudes())
            .map(|(l, r)| l + r)
            .collect();
        WaveFunction::from_amplitudes(g, hbar, amps).unwrap()
    }

    #[test]
    fn marginals_match_densities() {
        let hbar = 0.5;
        let psi = cat(2.0, hbar);
        let w = wigner_transform(&psi, 256).unwrap();
        let mx = w.marginal_x();
        let worst_x = mx
            .iter()
            .zip(psi.density())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst_x < 1e-6, "{worst_x:e}");
        // FFT-ordered momentum density, rotated to ascending order
        let mut rho_p = psi.momentum_density();
        rho_p.rotate_left(128);
        let worst_p = w
            .marginal_p()
            .iter()
            .zip(&rho_p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst_p < 1e-6, "{worst_p:e}");
    }

    #[test]
    fn moments_agree_with_wavefunction() {
        let psi = WaveFunction::gaussian(grid(), 0.4, -0.5, 0.8, 0.4, 0.15).unwrap();
        let a = psi.moments();
        let b = wigner_transform(&psi, 256).unwrap().moments();
        for (u, v) in [
            (a.mean_x, b.mean_x),
            (a.mean_p, b.mean_p),
            (a.var_x, b.var_x),
            (a.var_p, b.var_p),
            (a.cov_xp, b.cov_xp),
        ] {
            assert!((u - v).abs() < 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn cat_state_fringes() {
        let (a, hbar) = (2.0, 0.5);
        let g = grid();
        let left = WaveFunction::gaussian(g, hbar, -a, 0.0, 0.1, 0.0).unwrap();
        let right = WaveFunction::gaussian(g, hbar, a, 0.0, 0.1, 0.0).unwrap();
        let amps = left
            .amplitudes()
            .iter()
            .zip(right.amplitudes())
            .map(|(l, r)| l + r)
            .collect();
        let psi = WaveFunction::from_amplitudes(g, hbar, amps).unwrap();
        let w = wigner_transform(&psi, 256).unwrap();
        assert!(w.min_value() < 0.0);
        assert!(w.min_value() > -1.0 / (PI * hbar) - 1e-9);
        // row at x = 0 oscillates as cos(2ap/ħ)
        let i0 = w.x().iter().position(|x| x.abs() < 1e-12).unwrap();
        let row: Vec<f64> = (0..w.n_p()).map(|j| w.value(i0, j)).collect();
        let crossings: Vec<f64> = row
            .windows(2)
            .enumerate()
            .filter(|(_, v)| v[0].signum() != v[1].signum())
            .map(|(j, v)| w.p()[j] + w.dp() * v[0] / (v[0] - v[1]))
            .filter(|p| p.abs() < 1.0)
            .collect();
        let spacing = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        let expected = PI * hbar / a / 2.0;
        assert!(((spacing - expected) / expected).abs() < 0.01, "{spacing} vs {expected}");
    }

    #[test]
    fn harmonic_rotation_matches_sse() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let hbar = 0.5;
        let psi0 = WaveFunction::gaussian(grid(), hbar, 2.0, 0.0, 0.2, 0.0).unwrap();
        let mut w = wigner_transform(&psi0, 256).unwrap();
        let dt = TAU / 4.0 / 500.0;
        let stepper = WignerStepper::new(&sys, &w, dt, MeasurementConfig::unobserved()).unwrap();
        let sse = SseStepper::new(&sys, grid(), hbar, dt, MeasurementConfig::unobserved()).unwrap();
        let mut psi = psi0.clone();
        for i in 0..500 {
            stepper.step_with(&mut w, i as f64 * dt, 0.0).unwrap();
            sse.step_with(&mut psi, i as f64 * dt, 0.0).unwrap();
        }
        let g = w.moments();
        // a quarter turn maps (2, 0) to (0, −2)
        assert!(g.mean_x.abs() < 1e-4 && (g.mean_p + 2.0).abs() < 1e-4, "{g:?}");
        let reference = wigner_transform(&psi, 256).unwrap();
        let l1 = w.l1_distance(&reference).unwrap() / reference.l1_norm();
        assert!(l1 < 1e-3, "{l1:e}");
    }

    #[test]
    fn measurement_term_moves_centroid() {
        let sys = SystemSpec::free_particle(1.0);
        let psi = WaveFunction::gaussian(grid(), 0.5, 0.0, 0.0, 0.3, 0.0).unwrap();
        let mut w = wigner_transform(&psi, 256).unwrap();
        let k = 0.5;
        let dt = 1e-3;
        let stepper = WignerStepper::new(&sys, &w, dt, MeasurementConfig::new(k).unwrap()).unwrap();
        stepper.step_with(&mut w, 0.0, 0.01).unwrap();
        let expected = (8.0 * k).sqrt() * 0.3 * 0.01;
        assert!(((w.moments().mean_x - expected) / expected).abs() < 0.02);
    }
}
