//! Canonical units and the dimensionless rescaling.
//!
//! Every quantity inside the library is expressed in the canonical system
//! built on picogram, micrometer and second. Derived units follow:
//! momentum in pg·µm/s, energy in pg·µm²/s², action in pg·µm²/s, force in
//! pg·µm/s², and measurement strength in µm⁻²·s⁻¹.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::SystemSpec;

/// Reduced Planck constant in SI units (J·s), CODATA 2018 exact value.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Picograms per kilogram.
pub const PG_PER_KG: f64 = 1e15;
/// Micrometers per meter.
pub const UM_PER_M: f64 = 1e6;
/// Joules per electronvolt.
pub const J_PER_EV: f64 = 1.602_176_634e-19;

/// Reduced Planck constant in pg·µm²/s.
///
/// One J·s is one kg·m²/s, i.e. 10¹⁵ pg × 10¹² µm² per second.
pub const HBAR: f64 = 1.054_571_817e-7;

/// Energy of one electronvolt in pg·µm²/s².
pub const EV: f64 = J_PER_EV * PG_PER_KG * UM_PER_M * UM_PER_M;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum UnitMode {
    Physical,
    Dimensionless { hbar_eff: f64 },
}

/// The unit system a run is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub mode: UnitMode,
}

impl UnitSystem {
    pub fn physical() -> Self {
        Self {
            mode: UnitMode::Physical,
        }
    }

    pub fn dimensionless(hbar_eff: f64) -> Result<Self> {
        if !(hbar_eff.is_finite() && hbar_eff > 0.0) {
            return Err(Error::invalid(format!(
                "hbar_eff must be positive and finite, got {hbar_eff}"
            )));
        }
        Ok(Self {
            mode: UnitMode::Dimensionless { hbar_eff },
        })
    }

    /// ħ in the units of this system.
    pub fn hbar(&self) -> f64 {
        match self.mode {
            UnitMode::Physical => HBAR,
            UnitMode::Dimensionless { hbar_eff } => hbar_eff,
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.mode, UnitMode::Physical)
    }
}

/// Scale triple `(x0, p0, t0)` mapping canonical quantities to dimensionless ones.
///
/// The triple must satisfy `t0 = m·x0/p0` for the system mass so that the
/// rescaled mass is exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub x0: f64,
    pub p0: f64,
    pub t0: f64,
}

impl Scale {
    /// Scale triple for mass `m` with `t0` derived as `m·x0/p0`.
    pub fn for_mass(m: f64, x0: f64, p0: f64) -> Result<Self> {
        let scale = Self {
            x0,
            p0,
            t0: m * x0 / p0,
        };
        scale.check(m)?;
        Ok(scale)
    }

    fn check(&self, m: f64) -> Result<()> {
        for (name, v) in [("x0", self.x0), ("p0", self.p0), ("t0", self.t0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "scale {name} must be positive and finite, got {v}"
                )));
            }
        }
        let expected = m * self.x0 / self.p0;
        if ((self.t0 - expected) / expected).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "inconsistent scale triple: t0 = {} but m·x0/p0 = {} (m = {m} pg, x0 = {} µm, p0 = {} pg·µm/s); \
                 the time scale must equal m·x0/p0 for the rescaled mass to be 1",
                self.t0, expected, self.x0, self.p0
            )));
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.x0 * self.p0 / self.t0
    }

    pub fn action(&self) -> f64 {
        self.x0 * self.p0
    }

    pub fn force(&self) -> f64 {
        self.p0 / self.t0
    }

    /// Dimensionless ħ for this scale.
    pub fn hbar_eff(&self) -> f64 {
        HBAR / self.action()
    }

    pub fn to_x(&self, x: f64) -> f64 {
        x / self.x0
    }
    pub fn to_p(&self, p: f64) -> f64 {
        p / self.p0
    }
    pub fn to_t(&self, t: f64) -> f64 {
        t / self.t0
    }
    pub fn to_rate(&self, rate: f64) -> f64 {
        rate * self.t0
    }
    /// Measurement strength k (length⁻²·time⁻¹).
    pub fn to_k(&self, k: f64) -> f64 {
        k * self.x0 * self.x0 * self.t0
    }

    pub fn from_x(&self, x: f64) -> f64 {
        x * self.x0
    }
    pub fn from_p(&self, p: f64) -> f64 {
        p * self.p0
    }
    pub fn from_t(&self, t: f64) -> f64 {
        t * self.t0
    }
    pub fn from_rate(&self, rate: f64) -> f64 {
        rate / self.t0
    }
    pub fn from_k(&self, k: f64) -> f64 {
        k / (self.x0 * self.x0 * self.t0)
    }
}

/// Rewrites `sys` in the dimensionless variables defined by `(x0, p0, t0)`.
///
/// Returns the rescaled system together with `ħ/(x0·p0)`.
pub fn rescale_to_dimensionless(
    sys: &SystemSpec,
    x0: f64,
    p0: f64,
    t0: f64,
) -> Result<(SystemSpec, f64)> {
    let scale = Scale { x0, p0, t0 };
    scale.check(sys.mass())?;
    Ok((sys.rescaled(&scale), scale.hbar_eff()))
}

/// Physical dimension of a configurable quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Mass,
    Length,
    Area,
    Time,
    Momentum,
    Energy,
    Force,
    /// Spring constant, pg/s².
    Stiffness,
    /// Quartic coefficient, pg·µm⁻²·s⁻².
    Quartic,
    AngularFrequency,
    /// Measurement strength, µm⁻²·s⁻¹.
    MeasurementRate,
    /// Momentum diffusion, pg²·µm²/s³.
    MomentumDiffusion,
    /// Position diffusion, µm²/s.
    PositionDiffusion,
}

impl Dimension {
    /// Accepted unit spellings with their factor to canonical units.
    fn units(self) -> &'static [(&'static str, f64)] {
        use std::f64::consts::TAU;
        match self {
            Dimension::Mass => &[
                ("pg", 1.0),
                ("fg", 1e-3),
                ("ng", 1e3),
                ("ug", 1e6),
                ("µg", 1e6),
                ("mg", 1e9),
                ("g", 1e12),
                ("kg", 1e15),
            ],
            Dimension::Length => &[
                ("um", 1.0),
                ("µm", 1.0),
                ("nm", 1e-3),
                ("pm", 1e-6),
                ("mm", 1e3),
                ("m", 1e6),
            ],
            Dimension::Area => &[
                ("um^2", 1.0),
                ("µm^2", 1.0),
                ("nm^2", 1e-6),
                ("pm^2", 1e-12),
                ("m^2", 1e12),
            ],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6)],
            Dimension::Momentum => &[
                ("pg*um/s", 1.0),
                ("pg*µm/s", 1.0),
                ("pg*nm/s", 1e-3),
                ("kg*m/s", 1e21),
            ],
            Dimension::Energy => &[
                ("pg*um^2/s^2", 1.0),
                ("pg*µm^2/s^2", 1.0),
                ("J", 1e27),
                ("eV", EV),
                ("neV", EV * 1e-9),
            ],
            Dimension::Force => &[
                ("pg*um/s^2", 1.0),
                ("pg*µm/s^2", 1.0),
                ("aN", 1e3),
                ("fN", 1e6),
                ("pN", 1e9),
                ("nN", 1e12),
                ("N", 1e21),
            ],
            Dimension::Stiffness => &[
                ("pg/s^2", 1.0),
                ("pN/m", 1e3),
                ("nN/m", 1e6),
                ("N/m", 1e15),
            ],
            Dimension::Quartic => &[
                ("pg/um^2/s^2", 1.0),
                ("pg/µm^2/s^2", 1.0),
                ("N/m^3", 1e3),
            ],
            Dimension::AngularFrequency => &[("rad/s", 1.0), ("1/s", 1.0), ("Hz", TAU)],
            Dimension::MeasurementRate => &[
                ("1/(um^2*s)", 1.0),
                ("1/(µm^2*s)", 1.0),
                ("1/(nm^2*s)", 1e6),
                ("1/(pm^2*s)", 1e12),
                ("1/(m^2*s)", 1e-12),
                ("um^-2*s^-1", 1.0),
                ("µm^-2*s^-1", 1.0),
                ("nm^-2*s^-1", 1e6),
                ("pm^-2*s^-1", 1e12),
            ],
            Dimension::MomentumDiffusion => &[("pg^2*um^2/s^3", 1.0), ("pg^2*µm^2/s^3", 1.0)],
            Dimension::PositionDiffusion => &[("um^2/s", 1.0), ("µm^2/s", 1.0), ("m^2/s", 1e12)],
        }
    }

    /// Canonical unit label used in CSV headers.
    pub fn canonical_label(self) -> &'static str {
        self.units()[0].0
    }

    /// Powers of (length, momentum, time) in the dimensionless rescaling.
    ///
    /// Mass never appears on its own because the rescaled mass is one.
    fn scale_powers(self) -> (i32, i32, i32) {
        match self {
            Dimension::Mass => (-1, 1, 1),
            Dimension::Length => (1, 0, 0),
            Dimension::Area => (2, 0, 0),
            Dimension::Time => (0, 0, 1),
            Dimension::Momentum => (0, 1, 0),
            Dimension::Energy => (1, 1, -1),
            Dimension::Force => (0, 1, -1),
            Dimension::Stiffness => (-1, 1, -1),
            Dimension::Quartic => (-3, 1, -1),
            Dimension::AngularFrequency => (0, 0, -1),
            Dimension::MeasurementRate => (-2, 0, -1),
            Dimension::MomentumDiffusion => (0, 2, -1),
            Dimension::PositionDiffusion => (2, 0, -1),
        }
    }

    /// Size of one dimensionless unit of this quantity, in canonical units.
    pub fn unit_size(self, scale: &Scale) -> f64 {
        let (lx, lp, lt) = self.scale_powers();
        scale.x0.powi(lx) * scale.p0.powi(lp) * scale.t0.powi(lt)
    }
}

/// Token marking an already-dimensionless value in a config file.
pub const DIMLESS: &str = "dimless";

/// A parsed `"<number> <unit>"` string.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Canonical(f64),
    Dimensionless(f64),
}

/// Parses `"<number> <unit>"` for the given dimension.
///
/// Returns the value in canonical units, or marks it dimensionless when the
/// unit token is `dimless`. A bare number is rejected: every physical field
/// must name its unit.
pub fn parse_quantity(text: &str, dim: Dimension) -> std::result::Result<Quantity, String> {
    let text = text.trim();
    let (num, unit) = match text.split_once(char::is_whitespace) {
        Some((n, u)) => (n, u.trim()),
        None => {
            return Err(format!(
                "missing unit in `{text}`; expected `<number> <unit>` with unit one of {}",
                unit_list(dim)
            ))
        }
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("`{num}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    if unit == DIMLESS {
        return Ok(Quantity::Dimensionless(value));
    }
    let compact: String = unit.chars().filter(|c| !c.is_whitespace()).collect();
    dim.units()
        .iter()
        .find(|(name, _)| *name == compact)
        .map(|(_, factor)| Quantity::Canonical(value * factor))
        .ok_or_else(|| format!("unknown unit `{unit}`; expected one of {}", unit_list(dim)))
}

fn unit_list(dim: Dimension) -> String {
    let mut names: Vec<&str> = dim.units().iter().map(|(n, _)| *n).collect();
    names.push(DIMLESS);
    names.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route to ħ: J·s expanded through base SI units, then
    // each base unit converted separately.
    fn hbar_by_dimensional_analysis() -> f64 {
        let kg_in_pg = 1e3 /* g per kg */ * 1e12 /* pg per g */;
        let m_in_um = 1e6;
        // J·s = kg·m²·s⁻²·s = kg·m²·s⁻¹
        HBAR_SI * kg_in_pg * m_in_um * m_in_um
    }

    #[test]
    fn hbar_matches_dimensional_analysis() {
        let oracle = hbar_by_dimensional_analysis();
        assert!((HBAR - oracle).abs() / oracle < 1e-15, "{HBAR} vs {oracle}");
        assert!((HBAR - 1.054_571_817e-7).abs() < 1e-20);
    }

    #[test]
    fn identity_scaling_leaves_parameters() {
        let sys = SystemSpec::Duffing {
            m: 1.0,
            a: 990.0,
            b: 49500.0,
            lambda: 30.0,
            w: 60.0,
        };
        let (scaled, hbar_eff) = rescale_to_dimensionless(&sys, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(scaled, sys);
        assert_eq!(hbar_eff, HBAR);
    }

    #[test]
    fn paper_duffing_hbar_eff() {
        let sys = SystemSpec::paper_duffing();
        let scale = Scale::for_mass(1.0, 0.1, 2.6).unwrap();
        let (_, hbar_eff) = rescale_to_dimensionless(&sys, scale.x0, scale.p0, scale.t0).unwrap();
        assert!((hbar_eff - HBAR / 0.26).abs() / hbar_eff < 1e-14);
        assert!((hbar_eff - 4.056e-7).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_triple_rejected() {
        let sys = SystemSpec::paper_duffing();
        let err = rescale_to_dimensionless(&sys, 0.1, 2.6, 1.0).unwrap_err();
        assert!(err.to_string().contains("inconsistent scale triple"));
        assert!(rescale_to_dimensionless(&sys, -0.1, 2.6, 1.0).is_err());
    }

    #[test]
    fn physical_parameter_conversions() {
        let q = |s, d| match parse_quantity(s, d).unwrap() {
            Quantity::Canonical(v) => v,
            Quantity::Dimensionless(_) => panic!("unexpected dimless"),
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(q("0.99 pN/m", Dimension::Stiffness), 990.0));
        assert!(close(q("0.03 aN", Dimension::Force), 30.0));
        assert!(close(q("93 1/(pm^2*s)", Dimension::MeasurementRate), 9.3e13));
        assert!(close(q("0.02 um^2", Dimension::Area), 0.02));
        assert!(close(q("60 rad/s", Dimension::AngularFrequency), 60.0));
        assert!(close(q("1 pg", Dimension::Mass), 1.0));
        assert!(close(q("-98 nm", Dimension::Length), -0.098));
        assert!(close(q("1 kg", Dimension::Mass), 1e15));
    }

    #[test]
    fn parse_errors_name_the_problem() {
        assert!(parse_quantity("0.99", Dimension::Stiffness)
            .unwrap_err()
            .contains("missing unit"));
        assert!(parse_quantity("0.99 furlong", Dimension::Stiffness)
            .unwrap_err()
            .contains("unknown unit"));
        assert_eq!(
            parse_quantity("3 dimless", Dimension::Force).unwrap(),
            Quantity::Dimensionless(3.0)
        );
    }

    #[test]
    fn unit_sizes_follow_rescaling() {
        let scale = Scale::for_mass(1.0, 0.1, 2.6).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(Dimension::MeasurementRate.unit_size(&scale), 1.0 / scale.to_k(1.0)) < 1e-14);
        assert!(rel(Dimension::Energy.unit_size(&scale), scale.energy()) < 1e-14);
        assert!(rel(Dimension::Force.unit_size(&scale), scale.force()) < 1e-14);
        assert!(rel(Dimension::Mass.unit_size(&scale), 1.0) < 1e-14);
    }

    #[test]
    fn canonical_round_trip() {
        let scale = Scale::for_mass(1.0, 0.1, 2.6).unwrap();
        for v in [1e-9, 0.3, 7.0, 1e5] {
            assert!((scale.from_x(scale.to_x(v)) - v).abs() / v < 1e-12);
            assert!((scale.from_p(scale.to_p(v)) - v).abs() / v < 1e-12);
            assert!((scale.from_t(scale.to_t(v)) - v).abs() / v < 1e-12);
            assert!((scale.from_k(scale.to_k(v)) - v).abs() / v < 1e-12);
            assert!((scale.from_rate(scale.to_rate(v)) - v).abs() / v < 1e-12);
        }
    }
}
