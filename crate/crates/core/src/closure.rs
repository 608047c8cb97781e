//! Gaussian moment closure of the continuously measured Wigner function.
//!
//! The state is the centroid ⟨x⟩, ⟨p⟩ plus the second moments σₓ², σ_p²,
//! C_xp. The centroid follows
//!
//! ```text
//! d⟨x⟩ = ⟨p⟩/m dt + √(8k) σₓ² dW
//! d⟨p⟩ = ⟨F⟩ dt   + √(8k) C_xp dW
//! ```
//!
//! with a single Wiener increment (one measurement record), and the second
//! moments follow the noise-free equations
//!
//! ```text
//! dσₓ²/dt  = 2C_xp/m − 8kσₓ⁴
//! dσ_p²/dt = 2ħ²k − 8kC_xp² + 2∂ₓF·C_xp
//! dC_xp/dt = σ_p²/m − 8kσₓ²C_xp + ∂ₓF·σₓ²
//! ```
//!
//! where ⟨F⟩ = F(⟨x⟩) + ½σₓ²∂ₓ²F(⟨x⟩) and ∂ₓF is evaluated at ⟨x⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::SystemSpec;
use crate::state::{GaussianState, MeasurementConfig, PhaseState};

/// Closure right-hand side, without the noise terms.
pub fn closure_drift(
    sys: &SystemSpec,
    g: &GaussianState,
    t: f64,
    k: f64,
    hbar: f64,
) -> GaussianState {
    let m = sys.mass();
    let d = sys.force_derivatives(g.mean_x, t);
    let mean_force = sys.force(g.mean_x, t) + 0.5 * g.var_x * d.d2_force;
    GaussianState {
        mean_x: g.mean_p / m,
        mean_p: mean_force,
        var_x: 2.0 * g.cov_xp / m - 8.0 * k * g.var_x * g.var_x,
        var_p: 2.0 * hbar * hbar * k - 8.0 * k * g.cov_xp * g.cov_xp + 2.0 * d.d_force * g.cov_xp,
        cov_xp: g.var_p / m - 8.0 * k * g.var_x * g.cov_xp + d.d_force * g.var_x,
    }
}

fn axpy(a: f64, x: &GaussianState, y: &GaussianState) -> GaussianState {
    GaussianState {
        mean_x: y.mean_x + a * x.mean_x,
        mean_p: y.mean_p + a * x.mean_p,
        var_x: y.var_x + a * x.var_x,
        var_p: y.var_p + a * x.var_p,
        cov_xp: y.cov_xp + a * x.cov_xp,
    }
}

fn drift_rk4(sys: &SystemSpec, g: &GaussianState, t: f64, dt: f64, k: f64, hbar: f64) -> GaussianState {
    let h = 0.5 * dt;
    let k1 = closure_drift(sys, g, t, k, hbar);
    let k2 = closure_drift(sys, &axpy(h, &k1, g), t + h, k, hbar);
    let k3 = closure_drift(sys, &axpy(h, &k2, g), t + h, k, hbar);
    let k4 = closure_drift(sys, &axpy(dt, &k3, g), t + dt, k, hbar);
    let mut out = *g;
    out = axpy(dt / 6.0, &k1, &out);
    out = axpy(dt / 3.0, &k2, &out);
    out = axpy(dt / 3.0, &k3, &out);
    axpy(dt / 6.0, &k4, &out)
}

/// One Itô step of the closure driven by the increment `dw`.
///
/// The drift of all five moments is advanced with RK4; the centroid then
/// receives √(8k)σₓ²·dW and √(8k)C_xp·dW with coefficients taken at the
/// start of the step. The second moments carry no noise, so their time
/// series does not depend on the noise realization.
pub fn step_gaussian_closure_with(
    sys: &SystemSpec,
    g: &GaussianState,
    t: f64,
    dt: f64,
    meas: &MeasurementConfig,
    hbar: f64,
    dw: f64,
) -> Result<GaussianState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let k = meas.k;
    let mut next = drift_rk4(sys, g, t, dt, k, hbar);
    let gain = (8.0 * k).sqrt();
    next.mean_x += gain * g.var_x * dw;
    next.mean_p += gain * g.cov_xp * dw;
    next.check_quantum(hbar).map_err(|e| {
        Error::halt(format!(
            "Gaussian closure halted at t = {:e}: {e}",
            t + dt
        ))
    })?;
    Ok(next)
}

/// One Itô step of the closure, drawing the increment from `noise`.
pub fn step_gaussian_closure(
    sys: &SystemSpec,
    g: &GaussianState,
    t: f64,
    dt: f64,
    meas: &MeasurementConfig,
    hbar: f64,
    noise: &mut NoiseSource,
) -> Result<GaussianState> {
    let dw = if meas.is_observed() {
        noise.increment(dt)
    } else {
        0.0
    };
    step_gaussian_closure_with(sys, g, t, dt, meas, hbar, dw)
}

/// Stationary second moments with ∂ₓF frozen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

/// Fixed point of the second-moment equations for mass `m`, frozen force
/// gradient `d_force` and measurement strength `k > 0`.
///
/// Setting the three rates to zero gives C = 4kmσₓ⁴, σ_p² = mσₓ²(8kC − ∂ₓF)
/// and 4kC² − ∂ₓF·C − ħ²k = 0, whose positive root is
/// C = (∂ₓF + √(∂ₓF² + 16k²ħ²))/(8k). That branch always has positive
/// variances; it is returned only if it is also linearly stable.
pub fn steady_state_variances(
    m: f64,
    d_force: f64,
    meas: &MeasurementConfig,
    hbar: f64,
) -> Result<SteadyState> {
    let k = meas.k;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!(
            "steady state requires k > 0, got {k}"
        )));
    }
    if !(m > 0.0 && hbar > 0.0 && d_force.is_finite()) {
        return Err(Error::invalid("steady state requires m > 0, ħ > 0 and finite ∂ₓF"));
    }
    let root = d_force.hypot(4.0 * k * hbar);
    // Avoid cancellation when ∂ₓF is large and negative.
    let cov = if d_force >= 0.0 {
        (d_force + root) / (8.0 * k)
    } else {
        2.0 * k * hbar * hbar / (root - d_force)
    };
    let var_x = (cov / (4.0 * k * m)).sqrt();
    let var_p = m * var_x * root;
    let ss = SteadyState { var_x, var_p, cov_xp: cov };
    if !is_stable(m, d_force, k, &ss) {
        return Err(Error::halt(format!(
            "no steady state: the fixed point for ∂ₓF = {d_force:e} is unstable at k = {k:e}"
        )));
    }
    Ok(ss)
}

/// Routh–Hurwitz test on the Jacobian of the second-moment equations.
fn is_stable(m: f64, d_force: f64, k: f64, s: &SteadyState) -> bool {
    // variables (σₓ², σ_p², C)
    let j = [
        [-16.0 * k * s.var_x, 0.0, 2.0 / m],
        [0.0, 0.0, -16.0 * k * s.cov_xp + 2.0 * d_force],
        [
            -8.0 * k * s.cov_xp + d_force,
            1.0 / m,
            -8.0 * k * s.var_x,
        ],
    ];
    let trace = j[0][0] + j[1][1] + j[2][2];
    let minors = j[0][0] * j[1][1] - j[0][1] * j[1][0] + j[0][0] * j[2][2]
        - j[0][2] * j[2][0]
        + j[1][1] * j[2][2]
        - j[1][2] * j[2][1];
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    // λ³ + a2λ² + a1λ + a0
    let (a2, a1, a0) = (-trace, minors, -det);
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

/// Outcome of one classicality inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    /// The inequality cannot be evaluated at this point (zero force or zero ∂ₓF).
    Indeterminate,
}

/// Audit of the localization and weak-noise conditions for classical motion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalityReport {
    /// 8k, µm⁻²·s⁻¹.
    pub localization_lhs: f64,
    /// |∂ₓ²F/F|·√(|∂ₓF|/2m) at the evaluation point, µm⁻²·s⁻¹.
    pub localization_rhs: f64,
    /// Where the localization condition was evaluated: the maximum of ∂ₓF
    /// when the force has an unstable region, otherwise the typical point.
    pub localization_x: f64,
    pub localization: Verdict,
    /// 2|∂ₓF|/s at the typical point, pg/s².
    pub noise_lower: f64,
    /// |∂ₓF|·s/4 at the typical point, pg/s².
    pub noise_upper: f64,
    /// ħk, pg/s².
    pub hbar_k: f64,
    pub noise: Verdict,
    /// ħ|∂ₓ²F/F| ≥ 4√(m|∂ₓF|) at the typical point.
    pub nonlinearity_strong: bool,
    /// (∂ₓ²F)²ħ/(4mF²), the localization requirement on 8k when the
    /// nonlinearity is strong.
    pub strong_nonlinearity_rhs: Option<f64>,
    /// Action of the motion in units of ħ: |x·p|/ħ at the typical point.
    pub action_s: f64,
    /// [mF²/(∂ₓF)²]·|F/p| / ħ at the typical point.
    pub action_force_estimate: f64,
    /// |E|·|p/4F| / ħ at the typical point.
    pub action_energy_estimate: f64,
    /// The two footnote estimates differ by more than a factor of ten.
    pub action_estimates_disagree: bool,
    /// Safety factor used to resolve "much larger/smaller than".
    pub margin: f64,
    /// Measurement strengths satisfying every evaluated condition, if any.
    pub k_window: Option<(f64, f64)>,
    pub k: f64,
    pub k_in_window: bool,
    /// Human-readable notes for indeterminate inequalities.
    pub notes: Vec<String>,
}

impl ClassicalityReport {
    /// Width of the admissible window in decades (0 when empty).
    pub fn window_decades(&self) -> f64 {
        self.k_window
            .map(|(lo, hi)| (hi / lo).log10())
            .unwrap_or(0.0)
    }
}

/// Evaluates the classicality conditions for `sys` at a typical trajectory
/// point, with `margin` standing for "much larger than" (10 by default).
pub fn classicality_report(
    sys: &SystemSpec,
    typical: PhaseState,
    t: f64,
    meas: &MeasurementConfig,
    hbar: f64,
    margin: f64,
) -> Result<ClassicalityReport> {
    if !(margin >= 1.0 && margin.is_finite()) {
        return Err(Error::invalid(format!("margin must be >= 1, got {margin}")));
    }
    let m = sys.mass();
    let k = meas.k;
    let mut notes = Vec::new();

    // Localization at the most unstable point.
    let x_loc = sys.most_unstable_point().unwrap_or(typical.x);
    let f_loc = sys.force(x_loc, t);
    let d_loc = sys.force_derivatives(x_loc, t);
    let (localization_rhs, loc_determinate) = if d_loc.d2_force == 0.0 {
        (0.0, true)
    } else if f_loc == 0.0 {
        notes.push(format!(
            "localization condition indeterminate at x = {x_loc:e}: force vanishes"
        ));
        (f64::INFINITY, false)
    } else {
        (
            (d_loc.d2_force / f_loc).abs() * (d_loc.d_force.abs() / (2.0 * m)).sqrt(),
            true,
        )
    };
    let localization_lhs = 8.0 * k;
    let localization = if !loc_determinate {
        Verdict::Indeterminate
    } else if localization_lhs > margin * localization_rhs && k > 0.0 {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };

    // Weak noise at the typical point.
    let f = sys.force(typical.x, t);
    let d = sys.force_derivatives(typical.x, t);
    let abs_df = d.d_force.abs();
    let action_s = (typical.x * typical.p).abs() / hbar;
    let energy = 0.5 * typical.p * typical.p / m + sys.potential(typical.x, t);
    let action_force_estimate = if abs_df > 0.0 && typical.p != 0.0 {
        m * f * f / (d.d_force * d.d_force) * (f / typical.p).abs() / hbar
    } else {
        f64::NAN
    };
    let action_energy_estimate = if f != 0.0 {
        energy.abs() * (typical.p / (4.0 * f)).abs() / hbar
    } else {
        f64::NAN
    };
    let ratio = (action_force_estimate / action_energy_estimate).abs();
    let action_estimates_disagree = !(0.1..=10.0).contains(&ratio);

    let noise_lower = 2.0 * abs_df / action_s;
    let noise_upper = abs_df * action_s / 4.0;
    let hbar_k = hbar * k;
    let noise_determinate = abs_df > 0.0 && action_s > 0.0;
    if !noise_determinate {
        notes.push(format!(
            "noise condition indeterminate at x = {:e}: ∂ₓF or the action vanishes",
            typical.x
        ));
    }
    let noise = if !noise_determinate {
        Verdict::Indeterminate
    } else if hbar_k > margin * noise_lower && margin * hbar_k < noise_upper {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };

    // Strong-nonlinearity alternative.
    let nonlinearity_strong =
        f != 0.0 && hbar * (d.d2_force / f).abs() >= 4.0 * (m * abs_df).sqrt();
    let strong_nonlinearity_rhs =
        nonlinearity_strong.then(|| d.d2_force * d.d2_force * hbar / (4.0 * m * f * f));

    let k_window = if loc_determinate && noise_determinate {
        let mut lo = margin * noise_lower / hbar;
        lo = lo.max(margin * localization_rhs / 8.0);
        if let Some(rhs) = strong_nonlinearity_rhs {
            lo = lo.max(margin * rhs / 8.0);
        }
        let hi = noise_upper / (margin * hbar);
        (lo < hi).then_some((lo, hi))
    } else {
        None
    };
    let k_in_window = k_window.is_some_and(|(lo, hi)| k > lo && k < hi);

    Ok(ClassicalityReport {
        localization_lhs,
        localization_rhs,
        localization_x: x_loc,
        localization,
        noise_lower,
        noise_upper,
        hbar_k,
        noise,
        nonlinearity_strong,
        strong_nonlinearity_rhs,
        action_s,
        action_force_estimate,
        action_energy_estimate,
        action_estimates_disagree,
        margin,
        k_window,
        k,
        k_in_window,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::step_newton;
    use crate::units::HBAR;
    use std::f64::consts::TAU;

    fn free_closed_form(m: f64, k: f64, hbar: f64) -> SteadyState {
        SteadyState {
            var_x: (hbar / (8.0 * k * m)).sqrt(),
            var_p: (2.0 * hbar.powi(3) * k * m).sqrt(),
            cov_xp: hbar / 2.0,
        }
    }

    /// Independent route: bisection on the reduced polynomial in σₓ².
    /// With C = 4kmσₓ⁴ substituted, the σ_p² equation becomes
    /// 4k(4kmσ⁴)² − ∂ₓF(4kmσ⁴) − ħ²k = 0 (σ = σₓ²), monotone for σ > 0
    /// once past the turning point.
    fn bisection_steady_state(m: f64, d_force: f64, k: f64, hbar: f64) -> SteadyState {
        let g = |s: f64| {
            let c = 4.0 * k * m * s * s;
            4.0 * k * c * c - d_force * c - hbar * hbar * k
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        let var_x = 0.5 * (lo + hi);
        let cov = 4.0 * k * m * var_x * var_x;
        let var_p = m * var_x * (8.0 * k * cov - d_force);
        SteadyState { var_x, var_p, cov_xp: cov }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn free_particle_closed_form() {
        for &(m, k, hbar) in &[(1.0, 9.3e13, HBAR), (2.0, 3.0, 0.5), (0.3, 1e-3, 1.0)] {
            let meas = MeasurementConfig::new(k).unwrap();
            let s = steady_state_variances(m, 0.0, &meas, hbar).unwrap();
            let e = free_closed_form(m, k, hbar);
            assert!(rel(s.var_x, e.var_x) < 1e-10);
            assert!(rel(s.var_p, e.var_p) < 1e-10);
            assert!(rel(s.cov_xp, e.cov_xp) < 1e-10);
            assert!(rel(s.var_x * s.var_p, hbar * hbar / 2.0) < 1e-10);
            assert!(rel(s.var_x * s.var_p - s.cov_xp.powi(2), hbar * hbar / 4.0) < 1e-10);
        }
    }

    #[test]
    fn quadrupling_k_halves_free_variance() {
        let a = steady_state_variances(1.0, 0.0, &MeasurementConfig::new(5.0).unwrap(), 1.0).unwrap();
        let b = steady_state_variances(1.0, 0.0, &MeasurementConfig::new(20.0).unwrap(), 1.0).unwrap();
        assert!(rel(b.var_x, a.var_x / 2.0) < 1e-12);
    }

    #[test]
    fn closed_form_matches_bisection() {
        for &d_force in &[-3960.0, -1.0, 0.0, 0.5, 1980.0] {
            for &k in &[1e-2, 1.0, 1e2, 1e4] {
                let meas = MeasurementConfig::new(k).unwrap();
                let oracle = bisection_steady_state(1.0, d_force, k, 0.05);
                match steady_state_variances(1.0, d_force, &meas, 0.05) {
                    Ok(s) => {
                        assert!(rel(s.var_x, oracle.var_x) < 1e-10, "{d_force} {k}");
                        assert!(rel(s.var_p, oracle.var_p) < 1e-8, "{d_force} {k}");
                        assert!(rel(s.cov_xp, oracle.cov_xp) < 1e-8, "{d_force} {k}");
                    }
                    Err(e) => assert!(matches!(e, Error::NumericalHalt(_))),
                }
            }
        }
    }

    #[test]
    fn stable_harmonic_stays_pure_as_k_vanishes() {
        let hbar = 0.1;
        for &k in &[1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let meas = MeasurementConfig::new(k).unwrap();
            let s = steady_state_variances(1.0, -4.0, &meas, hbar).unwrap();
            let det = s.var_x * s.var_p - s.cov_xp * s.cov_xp;
            assert!(rel(det, hbar * hbar / 4.0) < 1e-9, "k={k}: {det}");
        }
        // k → 0⁺: ground state of ω = 2, σₓ² = ħ/(2mω), C → 0
        let s = steady_state_variances(1.0, -4.0, &MeasurementConfig::new(1e-8).unwrap(), hbar).unwrap();
        assert!(rel(s.var_x, hbar / 4.0) < 1e-6);
        assert!(s.cov_xp.abs() < 1e-8);
    }

    #[test]
    fn requires_positive_k() {
        assert!(steady_state_variances(1.0, 0.0, &MeasurementConfig::unobserved(), 1.0).is_err());
    }

    #[test]
    fn harmonic_unobserved_centroid_is_classical() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let meas = MeasurementConfig::unobserved();
        let mut noise = NoiseSource::new(0, 0);
        let hbar = 0.1;
        let mut g = GaussianState::pure(1.0, 0.0, 0.05, 0.0, hbar);
        let mut c = g.centroid();
        let dt = TAU / 1e4;
        for i in 0..10_000 {
            let t = i as f64 * dt;
            g = step_gaussian_closure(&sys, &g, t, dt, &meas, hbar, &mut noise).unwrap();
            c = step_newton(&sys, c, t, dt).unwrap();
            assert!((g.mean_x - c.x).abs() < 1e-12 && (g.mean_p - c.p).abs() < 1e-12);
        }
    }

    #[test]
    fn unobserved_linear_force_conserves_det() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 1.3 };
        let meas = MeasurementConfig::unobserved();
        let mut noise = NoiseSource::new(0, 0);
        let mut g = GaussianState {
            mean_x: 0.2,
            mean_p: 0.0,
            var_x: 0.3,
            var_p: 0.2,
            cov_xp: 0.05,
        };
        let det0 = g.uncertainty_det();
        for i in 0..20_000 {
            g = step_gaussian_closure(&sys, &g, i as f64 * 1e-3, 1e-3, &meas, 0.1, &mut noise).unwrap();
        }
        assert!(rel(g.uncertainty_det(), det0) < 1e-9);
    }

    #[test]
    fn free_particle_converges_to_steady_state() {
        let (m, k) = (1.0, 9.3e13);
        let sys = SystemSpec::free_particle(m);
        let meas = MeasurementConfig::new(k).unwrap();
        let target = steady_state_variances(m, 0.0, &meas, HBAR).unwrap();
        // start 10× wider than stationary, pure
        let mut g = GaussianState::pure(0.0, 0.0, 10.0 * target.var_x, 0.0, HBAR);
        let rate = 8.0 * k * target.var_x;
        let t_end = 50.0 / rate;
        let n = 50_000;
        let dt = t_end / n as f64;
        let mut noise = NoiseSource::new(9, 0);
        for i in 0..n {
            g = step_gaussian_closure(&sys, &g, i as f64 * dt, dt, &meas, HBAR, &mut noise).unwrap();
        }
        assert!(rel(g.var_x, target.var_x) < 0.01);
        assert!(rel(g.var_p, target.var_p) < 0.01);
        assert!(rel(g.cov_xp, target.cov_xp) < 0.01);
    }

    #[test]
    fn variance_series_independent_of_seed() {
        // ∂ₓF is position-independent for the driven harmonic system, so the
        // second moments never see the centroid noise.
        let sys = SystemSpec::DrivenHarmonic {
            m: 1.0,
            w0: 30.0,
            lambda: 30.0,
            w: 60.0,
        };
        let meas = MeasurementConfig::new(9.3e13).unwrap();
        let ss = steady_state_variances(1.0, -900.0, &meas, HBAR).unwrap();
        let start = GaussianState {
            mean_x: -0.098,
            mean_p: 2.6,
            var_x: 3.0 * ss.var_x,
            var_p: ss.var_p,
            cov_xp: ss.cov_xp,
        };
        let dt = TAU / 60.0 / 1e4;
        let run = |seed| {
            let mut noise = NoiseSource::new(seed, 0);
            let mut g = start;
            let mut out = Vec::new();
            for i in 0..5000 {
                g = step_gaussian_closure(&sys, &g, i as f64 * dt, dt, &meas, HBAR, &mut noise).unwrap();
                out.push((g.var_x.to_bits(), g.var_p.to_bits(), g.cov_xp.to_bits()));
            }
            out
        };
        assert_eq!(run(1), run(2));
    }

    #[test]
    fn centroid_noise_variance() {
        let sys = SystemSpec::free_particle(1.0);
        let (k, hbar) = (2.0, 0.5);
        let meas = MeasurementConfig::new(k).unwrap();
        let ss = steady_state_variances(1.0, 0.0, &meas, hbar).unwrap();
        let g0 = GaussianState {
            mean_x: 0.0,
            mean_p: 0.0,
            var_x: ss.var_x,
            var_p: ss.var_p,
            cov_xp: ss.cov_xp,
        };
        let dt = 1e-4;
        let n = 20_000;
        let deterministic = step_gaussian_closure_with(&sys, &g0, 0.0, dt, &meas, hbar, 0.0).unwrap();
        let dx: Vec<f64> = (0..n)
            .map(|r| {
                let mut noise = NoiseSource::new(4, r);
                step_gaussian_closure(&sys, &g0, 0.0, dt, &meas, hbar, &mut noise).unwrap().mean_x
                    - deterministic.mean_x
            })
            .collect();
        let var = dx.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let expected = 8.0 * k * ss.var_x.powi(2) * dt;
        assert!(rel(var, expected) < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn paper_duffing_classicality() {
        let meas = MeasurementConfig::new(9.3e13).unwrap();
        let r = classicality_report(
            &SystemSpec::paper_duffing(),
            PhaseState::new(0.1, 2.6),
            0.0,
            &meas,
            HBAR,
            10.0,
        )
        .unwrap();
        assert_eq!(r.localization, Verdict::Satisfied);
        assert_eq!(r.noise, Verdict::Satisfied);
        assert!(!r.nonlinearity_strong);
        assert!(r.k_in_window, "{r:?}");
        assert!(r.window_decades() >= 4.0);
        assert!(rel(r.action_s, 0.26 / HBAR) < 1e-12);
        assert!(r.action_estimates_disagree);
    }

    #[test]
    fn small_action_has_empty_window() {
        // dimensionless reference Duffing with ħ chosen so that s = |x p|/ħ = 2√2
        let scale = crate::units::Scale::for_mass(1.0, 0.1, 2.6).unwrap();
        let sys = SystemSpec::paper_duffing().rescaled(&scale);
        let hbar = 1.0 / 8.0_f64.sqrt();
        let meas = MeasurementConfig::new(1.0).unwrap();
        for margin in [1.0, 10.0] {
            let r = classicality_report(&sys, PhaseState::new(1.0, 1.0), 0.0, &meas, hbar, margin)
                .unwrap();
            assert!((r.action_s - 8.0_f64.sqrt()).abs() < 1e-12);
            assert!(r.k_window.is_none(), "margin {margin}: {:?}", r.k_window);
        }
        // with no nonlinearity the noise window opens just above 2√2
        let osc = SystemSpec::Harmonic { m: 1.0, w0: 1.0 };
        let r = classicality_report(&osc, PhaseState::new(1.0, 1.0), 0.0, &meas, hbar * 0.9, 1.0)
            .unwrap();
        assert!(r.k_window.is_some());
        let r = classicality_report(&osc, PhaseState::new(1.0, 1.0), 0.0, &meas, hbar * 1.01, 1.0).unwrap();
        assert!(r.k_window.is_none());
    }

    #[test]
    fn harmonic_localization_trivial() {
        let sys = SystemSpec::Harmonic { m: 1.0, w0: 2.0 };
        let meas = MeasurementConfig::new(1e-3).unwrap();
        let r = classicality_report(&sys, PhaseState::new(1.0, 1.0), 0.0, &meas, 1e-3, 10.0).unwrap();
        assert_eq!(r.localization_rhs, 0.0);
        assert_eq!(r.localization, Verdict::Satisfied);
    }

    #[test]
    fn zero_force_gradient_is_indeterminate() {
        // free particle: ∂ₓF = 0 everywhere
        let sys = SystemSpec::free_particle(1.0);
        let meas = MeasurementConfig::new(1.0).unwrap();
        let r = classicality_report(&sys, PhaseState::new(1.0, 1.0), 0.0, &meas, 1e-3, 10.0).unwrap();
        assert_eq!(r.noise, Verdict::Indeterminate);
        assert!(r.k_window.is_none());
        assert!(!r.notes.is_empty());
    }
}
