//! The four single-particle systems: harmonic oscillator, double well,
//! driven harmonic oscillator and the Duffing oscillator (driven double well).
//!
//! All derivatives are analytic. Quartic potentials have vanishing fifth and
//! higher derivatives, which is what makes the third-order Wigner correction
//! exact rather than truncated.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Scale;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// V = ½mω₀²x². ω₀ = 0 is the free particle.
    Harmonic { m: f64, w0: f64 },
    /// V = Bx⁴ − Ax².
    DoubleWell { m: f64, a: f64, b: f64 },
    /// V = ½mω₀²x² + Λx cos ωt.
    DrivenHarmonic { m: f64, w0: f64, lambda: f64, w: f64 },
    /// V = Bx⁴ − Ax² + Λx cos ωt.
    Duffing {
        m: f64,
        a: f64,
        b: f64,
        lambda: f64,
        w: f64,
    },
}

/// First and second derivatives of the force and third derivative of the potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceDerivatives {
    pub d_force: f64,
    pub d2_force: f64,
    pub d3_potential: f64,
}

impl SystemSpec {
    /// The Duffing oscillator with m = 1 pg, A = 0.99 pN/m, A/B = 0.02 µm²,
    /// Λ = 0.03 aN and ω = 60 rad/s, in canonical units.
    pub fn paper_duffing() -> Self {
        SystemSpec::Duffing {
            m: 1.0,
            a: 990.0,
            b: 49_500.0,
            lambda: 30.0,
            w: 60.0,
        }
    }

    pub fn free_particle(m: f64) -> Self {
        SystemSpec::Harmonic { m, w0: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::invalid(format!("{what} out of range: {v}")))
        };
        let all_finite = match *self {
            SystemSpec::Harmonic { m, w0 } => [m, w0, 0.0, 0.0, 0.0],
            SystemSpec::DoubleWell { m, a, b } => [m, a, b, 0.0, 0.0],
            SystemSpec::DrivenHarmonic { m, w0, lambda, w } => [m, w0, lambda, w, 0.0],
            SystemSpec::Duffing { m, a, b, lambda, w } => [m, a, b, lambda, w],
        }
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid(format!("non-finite system parameter in {self:?}")));
        }
        if self.mass() <= 0.0 {
            return bad("mass m (must be > 0)", self.mass());
        }
        match *self {
            SystemSpec::Harmonic { w0, .. } | SystemSpec::DrivenHarmonic { w0, .. } if w0 < 0.0 => {
                bad("w0 (must be >= 0)", w0)
            }
            SystemSpec::DoubleWell { b, .. } | SystemSpec::Duffing { b, .. } if b <= 0.0 => {
                bad("quartic coefficient B (must be > 0)", b)
            }
            SystemSpec::DrivenHarmonic { w, .. } | SystemSpec::Duffing { w, .. } if w <= 0.0 => {
                bad("drive frequency w (must be > 0)", w)
            }
            _ => Ok(()),
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            SystemSpec::Harmonic { m, .. }
            | SystemSpec::DoubleWell { m, .. }
            | SystemSpec::DrivenHarmonic { m, .. }
            | SystemSpec::Duffing { m, .. } => m,
        }
    }

    /// Drive angular frequency for driven variants.
    pub fn drive_frequency(&self) -> Option<f64> {
        match *self {
            SystemSpec::DrivenHarmonic { w, .. } | SystemSpec::Duffing { w, .. } => Some(w),
            _ => None,
        }
    }

    pub fn is_driven(&self) -> bool {
        self.drive_frequency().is_some()
    }

    pub fn is_quartic(&self) -> bool {
        matches!(self, SystemSpec::DoubleWell { .. } | SystemSpec::Duffing { .. })
    }

    /// Natural time scale of the system: the drive period when driven,
    /// otherwise the small-oscillation period (about a well minimum for the
    /// double well). `None` for the free particle.
    pub fn reference_period(&self) -> Option<f64> {
        if let Some(w) = self.drive_frequency() {
            return Some(TAU / w);
        }
        let omega = match *self {
            SystemSpec::Harmonic { w0, .. } => w0,
            // V''(x*) = 12Bx*² − 2A = 4A at x*² = A/2B
            SystemSpec::DoubleWell { m, a, .. } => (4.0 * a / m).sqrt(),
            _ => unreachable!(),
        };
        (omega > 0.0).then(|| TAU / omega)
    }

    fn drive(&self, t: f64) -> f64 {
        match *self {
            SystemSpec::DrivenHarmonic { lambda, w, .. } | SystemSpec::Duffing { lambda, w, .. } => {
                lambda * (w * t).cos()
            }
            _ => 0.0,
        }
    }

    pub fn potential(&self, x: f64, t: f64) -> f64 {
        match *self {
            SystemSpec::Harmonic { m, w0 } => 0.5 * m * w0 * w0 * x * x,
            SystemSpec::DoubleWell { a, b, .. } => b * x.powi(4) - a * x * x,
            SystemSpec::DrivenHarmonic { m, w0, .. } => {
                0.5 * m * w0 * w0 * x * x + self.drive(t) * x
            }
            SystemSpec::Duffing { a, b, .. } => b * x.powi(4) - a * x * x + self.drive(t) * x,
        }
    }

    pub fn force(&self, x: f64, t: f64) -> f64 {
        match *self {
            SystemSpec::Harmonic { m, w0 } => -m * w0 * w0 * x,
            SystemSpec::DoubleWell { a, b, .. } => -4.0 * b * x.powi(3) + 2.0 * a * x,
            SystemSpec::DrivenHarmonic { m, w0, .. } => -m * w0 * w0 * x - self.drive(t),
            SystemSpec::Duffing { a, b, .. } => {
                -4.0 * b * x.powi(3) + 2.0 * a * x - self.drive(t)
            }
        }
    }

    pub fn force_derivatives(&self, x: f64, _t: f64) -> ForceDerivatives {
        match *self {
            SystemSpec::Harmonic { m, w0 } | SystemSpec::DrivenHarmonic { m, w0, .. } => {
                ForceDerivatives {
                    d_force: -m * w0 * w0,
                    d2_force: 0.0,
                    d3_potential: 0.0,
                }
            }
            SystemSpec::DoubleWell { a, b, .. } | SystemSpec::Duffing { a, b, .. } => {
                ForceDerivatives {
                    d_force: -12.0 * b * x * x + 2.0 * a,
                    d2_force: -24.0 * b * x,
                    d3_potential: 24.0 * b * x,
                }
            }
        }
    }

    /// Position of the maximum of ∂ₓF, if ∂ₓF is positive anywhere.
    pub fn most_unstable_point(&self) -> Option<f64> {
        match *self {
            SystemSpec::DoubleWell { a, .. } | SystemSpec::Duffing { a, .. } if a > 0.0 => {
                Some(0.0)
            }
            _ => None,
        }
    }

    /// The same system in the dimensionless variables of `scale`.
    pub fn rescaled(&self, scale: &Scale) -> SystemSpec {
        let e0 = scale.energy();
        let x0 = scale.x0;
        let m_unit = scale.p0 * scale.t0 / scale.x0;
        match *self {
            SystemSpec::Harmonic { m, w0 } => SystemSpec::Harmonic {
                m: m / m_unit,
                w0: scale.to_rate(w0),
            },
            SystemSpec::DoubleWell { m, a, b } => SystemSpec::DoubleWell {
                m: m / m_unit,
                a: a * x0 * x0 / e0,
                b: b * x0.powi(4) / e0,
            },
            SystemSpec::DrivenHarmonic { m, w0, lambda, w } => SystemSpec::DrivenHarmonic {
                m: m / m_unit,
                w0: scale.to_rate(w0),
                lambda: lambda * x0 / e0,
                w: scale.to_rate(w),
            },
            SystemSpec::Duffing { m, a, b, lambda, w } => SystemSpec::Duffing {
                m: m / m_unit,
                a: a * x0 * x0 / e0,
                b: b * x0.powi(4) / e0,
                lambda: lambda * x0 / e0,
                w: scale.to_rate(w),
            },
        }
    }
}
