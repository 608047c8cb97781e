//! Experiment configuration: a JSON document whose physical fields are
//! `"<number> <unit>"` strings, converted here to canonical units.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{Averaging, LyapunovProtocol, NeighbourMode, PhaseMetric, WindowRule};
use crate::classical::ClassicalNoiseSpec;
use crate::error::{Error, Result};
use crate::potentials::SystemSpec;
use crate::quantum::Grid;
use crate::state::{MeasurementConfig, PhaseState};
use crate::units::{parse_quantity, Dimension, Quantity, UnitSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Classical,
    NoisyClassical,
    Closure,
    Sse,
    WignerGrid,
}

impl BackendKind {
    pub fn is_quantum_grid(self) -> bool {
        matches!(self, BackendKind::Sse | BackendKind::WignerGrid)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[default]
    Simulate,
    Lyapunov,
    Strobe,
    WignerSnapshot,
    CheckClassicality,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Lyapunov => "lyapunov",
            Task::Strobe => "strobe",
            Task::WignerSnapshot => "wigner-snapshot",
            Task::CheckClassicality => "check-classicality",
        }
    }
}

// ---- file layout -------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    name: Option<String>,
    units: UnitsFile,
    system: SystemFile,
    #[serde(default)]
    measurement: Option<MeasurementFile>,
    backend: BackendKind,
    #[serde(default)]
    task: Task,
    start: PointFile,
    integrator: IntegratorFile,
    #[serde(default)]
    noise: Option<NoiseFile>,
    #[serde(default)]
    lyapunov: Option<LyapunovFile>,
    #[serde(default)]
    strobe: Option<StrobeFile>,
    #[serde(default)]
    snapshot: Option<SnapshotFile>,
    #[serde(default)]
    classicality: Option<ClassicalityFile>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum UnitsMode {
    Physical,
    Dimensionless,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsFile {
    mode: UnitsMode,
    #[serde(default)]
    hbar_eff: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SystemKind {
    Harmonic,
    DoubleWell,
    DrivenHarmonic,
    Duffing,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    kind: SystemKind,
    m: String,
    #[serde(default)]
    w0: Option<String>,
    #[serde(default)]
    a: Option<String>,
    #[serde(default)]
    b: Option<String>,
    #[serde(default)]
    a_over_b: Option<String>,
    #[serde(default)]
    lambda: Option<String>,
    #[serde(default)]
    w: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementFile {
    k: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    x: String,
    p: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorFile {
    #[serde(default)]
    steps_per_period: Option<usize>,
    #[serde(default)]
    dt: Option<String>,
    #[serde(default)]
    periods: Option<usize>,
    #[serde(default)]
    duration: Option<String>,
    #[serde(default)]
    record_every: Option<usize>,
    #[serde(default)]
    grid: Option<GridFile>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    n: usize,
    #[serde(default)]
    x_min: Option<String>,
    #[serde(default)]
    x_max: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    #[serde(default)]
    matched: bool,
    #[serde(default)]
    d_p: Option<String>,
    #[serde(default)]
    d_x: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricFile {
    dx: String,
    dp: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LyapunovFile {
    n_fiducials: Option<usize>,
    n_samples: Option<usize>,
    neighbors: Option<usize>,
    spacing_periods: Option<usize>,
    horizon_periods: Option<usize>,
    transient_periods: Option<usize>,
    records_per_period: Option<usize>,
    epsilon: Option<f64>,
    fiducial_spread: Option<f64>,
    metric: Option<MetricFile>,
    averaging: Option<Averaging>,
    neighbour_mode: Option<NeighbourMode>,
    window: Option<WindowRule>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistogramFile {
    x_range: [String; 2],
    p_range: [String; 2],
    bins: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrobeFile {
    periods: Option<usize>,
    transient_periods: Option<usize>,
    histogram: Option<HistogramFile>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    at: Option<Vec<String>>,
    p_count: Option<usize>,
    stride: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalityFile {
    margin: Option<f64>,
    typical: Option<PointFile>,
}

// ---- canonical configuration ------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramConfig {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrobeConfig {
    pub periods: usize,
    pub transient_periods: usize,
    pub histogram: Option<HistogramConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotConfig {
    /// Step indices at which the Wigner function is written.
    pub at_steps: Vec<usize>,
    pub p_count: usize,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalityConfig {
    pub margin: f64,
    pub typical: PhaseState,
}

/// A validated experiment with every value in canonical (or dimensionless) units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub units: UnitSystem,
    pub system: SystemSpec,
    pub measurement: MeasurementConfig,
    pub backend: BackendKind,
    pub task: Task,
    pub start: PhaseState,
    pub dt: f64,
    /// Drive (or natural) period, when the system has one.
    pub period: Option<f64>,
    /// Steps per period, when dt divides the period.
    pub steps_per_period: Option<usize>,
    pub n_steps: usize,
    pub record_every: usize,
    pub grid: Option<Grid>,
    pub noise: ClassicalNoiseSpec,
    pub lyapunov: LyapunovProtocol,
    pub strobe: StrobeConfig,
    pub snapshot: SnapshotConfig,
    pub classicality: ClassicalityConfig,
    pub seed: u64,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn hbar(&self) -> f64 {
        self.units.hbar()
    }

    /// Labels for CSV headers: canonical unit, or `dimless`.
    pub fn unit_label(&self, dim: Dimension) -> &'static str {
        if self.units.is_physical() {
            dim.canonical_label()
        } else {
            crate::units::DIMLESS
        }
    }

    /// The drive period, required by period-based protocols.
    pub fn require_period(&self, what: &str) -> Result<(f64, usize)> {
        match (self.period, self.steps_per_period) {
            (Some(t), Some(n)) => Ok((t, n)),
            (None, _) => Err(Error::config(
                "system",
                format!("{what} needs a periodic system (driven, or with a natural period)"),
            )),
            (Some(_), None) => Err(Error::config(
                "integrator",
                format!("{what} needs a dt that divides the period; use integrator.steps_per_period"),
            )),
        }
    }
}

struct Ctx {
    physical: bool,
}

impl Ctx {
    fn q(&self, path: &str, text: &str, dim: Dimension) -> Result<f64> {
        match parse_quantity(text, dim).map_err(|e| Error::config(path, e))? {
            Quantity::Canonical(v) if self.physical => Ok(v),
            Quantity::Dimensionless(v) if !self.physical => Ok(v),
            Quantity::Canonical(_) => Err(Error::config(
                path,
                format!("`{text}`: dimensionless runs take `<number> dimless`"),
            )),
            Quantity::Dimensionless(_) => Err(Error::config(
                path,
                format!("`{text}`: physical runs need an explicit unit"),
            )),
        }
    }

    fn opt(&self, path: &str, text: &Option<String>, dim: Dimension) -> Result<Option<f64>> {
        text.as_deref().map(|t| self.q(path, t, dim)).transpose()
    }

    fn req(&self, path: &str, text: &Option<String>, dim: Dimension) -> Result<f64> {
        self.opt(path, text, dim)?
            .ok_or_else(|| Error::config(path, "required for this system kind"))
    }
}

fn forbid(path: &str, v: &Option<String>) -> Result<()> {
    match v {
        Some(_) => Err(Error::config(path, "not used by this system kind")),
        None => Ok(()),
    }
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

fn system(ctx: &Ctx, f: &SystemFile) -> Result<SystemSpec> {
    let m = positive("system.m", ctx.q("system.m", &f.m, Dimension::Mass)?)?;
    let quartic = |ctx: &Ctx| -> Result<(f64, f64)> {
        let a = ctx.req("system.a", &f.a, Dimension::Stiffness)?;
        let b = match (&f.b, &f.a_over_b) {
            (Some(_), Some(_)) => {
                return Err(Error::config("system.a_over_b", "give either system.b or system.a_over_b"))
            }
            (Some(_), None) => ctx.req("system.b", &f.b, Dimension::Quartic)?,
            (None, Some(_)) => {
                let r = positive("system.a_over_b", ctx.req("system.a_over_b", &f.a_over_b, Dimension::Area)?)?;
                a / r
            }
            (None, None) => return Err(Error::config("system.b", "required (or system.a_over_b)")),
        };
        Ok((a, b))
    };
    let sys = match f.kind {
        SystemKind::Harmonic => {
            for (p, v) in [("system.a", &f.a), ("system.b", &f.b), ("system.a_over_b", &f.a_over_b)] {
                forbid(p, v)?;
            }
            forbid("system.lambda", &f.lambda)?;
            forbid("system.w", &f.w)?;
            SystemSpec::Harmonic {
                m,
                w0: ctx.req("system.w0", &f.w0, Dimension::AngularFrequency)?,
            }
        }
        SystemKind::DoubleWell => {
            forbid("system.w0", &f.w0)?;
            forbid("system.lambda", &f.lambda)?;
            forbid("system.w", &f.w)?;
            let (a, b) = quartic(ctx)?;
            SystemSpec::DoubleWell { m, a, b }
        }
        SystemKind::DrivenHarmonic => {
            for (p, v) in [("system.a", &f.a), ("system.b", &f.b), ("system.a_over_b", &f.a_over_b)] {
                forbid(p, v)?;
            }
            SystemSpec::DrivenHarmonic {
                m,
                w0: ctx.req("system.w0", &f.w0, Dimension::AngularFrequency)?,
                lambda: ctx.req("system.lambda", &f.lambda, Dimension::Force)?,
                w: ctx.req("system.w", &f.w, Dimension::AngularFrequency)?,
            }
        }
        SystemKind::Duffing => {
            forbid("system.w0", &f.w0)?;
            let (a, b) = quartic(ctx)?;
            SystemSpec::Duffing {
                m,
                a,
                b,
                lambda: ctx.req("system.lambda", &f.lambda, Dimension::Force)?,
                w: ctx.req("system.w", &f.w, Dimension::AngularFrequency)?,
            }
        }
    };
    sys.validate().map_err(|e| Error::config("system", e.to_string()))?;
    Ok(sys)
}

/// Outermost classical turning points at the energy of `start` (t = 0).
pub fn turning_points(sys: &SystemSpec, start: PhaseState) -> Option<(f64, f64)> {
    let e = 0.5 * start.p * start.p / sys.mass() + sys.potential(start.x, 0.0);
    let find = |dir: f64| -> Option<f64> {
        let excess = |x: f64| sys.potential(x, 0.0) - e;
        let mut step = 1e-3_f64.max(start.x.abs() * 1e-2);
        let mut inner = start.x;
        let mut outer = start.x + dir * step;
        let mut tries = 0;
        // walk outward until the potential exceeds the energy for good
        while excess(outer) <= 0.0 || excess(outer + dir * step) <= excess(outer) {
            inner = outer;
            step *= 1.5;
            outer += dir * step;
            tries += 1;
            if tries > 200 || !outer.is_finite() {
                return None;
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (inner + outer);
            if excess(mid) > 0.0 {
                outer = mid;
            } else {
                inner = mid;
            }
        }
        Some(outer)
    };
    Some((find(-1.0)?, find(1.0)?))
}

/// Default grid: `n` points over six times the turning-point span.
pub fn default_grid(sys: &SystemSpec, start: PhaseState, n: usize) -> Option<Grid> {
    let (lo, hi) = turning_points(sys, start)?;
    let (mid, span) = (0.5 * (lo + hi), hi - lo);
    Grid::new(mid - 3.0 * span, mid + 3.0 * span, n).ok()
}

/// Rough grid size a wavefunction run would need: the phase-space area of
/// the default box divided by the area 2πħ of one cell.
pub fn required_grid_points(sys: &SystemSpec, start: PhaseState, hbar: f64) -> Option<f64> {
    let (lo, hi) = turning_points(sys, start)?;
    let span = 6.0 * (hi - lo);
    let e = 0.5 * start.p * start.p / sys.mass() + sys.potential(start.x, 0.0);
    let v_min = (0..=200)
        .map(|i| sys.potential(lo + (hi - lo) * i as f64 / 200.0, 0.0))
        .fold(f64::INFINITY, f64::min);
    let p_max = (2.0 * sys.mass() * (e - v_min)).max(0.0).sqrt();
    Some(span * 2.0 * p_max / (std::f64::consts::TAU * hbar))
}

const DEFAULT_GRID_N: usize = 2048;

/// Parses and validates a configuration document.
pub fn validate_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let f: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })?;

    let (units, ctx) = match f.units.mode {
        UnitsMode::Physical => {
            if f.units.hbar_eff.is_some() {
                return Err(Error::config("units.hbar_eff", "only allowed in dimensionless mode"));
            }
            (UnitSystem::physical(), Ctx { physical: true })
        }
        UnitsMode::Dimensionless => {
            let h = f
                .units
                .hbar_eff
                .ok_or_else(|| Error::config("units.hbar_eff", "required in dimensionless mode"))?;
            (
                UnitSystem::dimensionless(h).map_err(|e| Error::config("units.hbar_eff", e.to_string()))?,
                Ctx { physical: false },
            )
        }
    };
    let hbar = units.hbar();
    let system = system(&ctx, &f.system)?;

    let k = match &f.measurement {
        Some(mf) => ctx.q("measurement.k", &mf.k, Dimension::MeasurementRate)?,
        None => 0.0,
    };
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::config("measurement.k", format!("must be finite and non-negative, got {k}")));
    }
    let measurement = MeasurementConfig { k };

    let start = PhaseState::new(
        ctx.q("start.x", &f.start.x, Dimension::Length)?,
        ctx.q("start.p", &f.start.p, Dimension::Momentum)?,
    );

    // time stepping
    let period = system.reference_period();
    let ig = &f.integrator;
    let (dt, steps_per_period) = match (ig.steps_per_period, &ig.dt) {
        (Some(_), Some(_)) => {
            return Err(Error::config("integrator.dt", "give either integrator.dt or integrator.steps_per_period"))
        }
        (Some(n), None) => {
            let t = period.ok_or_else(|| {
                Error::config("integrator.steps_per_period", "system has no period; give integrator.dt")
            })?;
            if n == 0 {
                return Err(Error::config("integrator.steps_per_period", "must be positive"));
            }
            (t / n as f64, Some(n))
        }
        (None, Some(text)) => {
            let dt = positive("integrator.dt", ctx.q("integrator.dt", text, Dimension::Time)?)?;
            let spp = period.and_then(|t| {
                let r = t / dt;
                ((r - r.round()).abs() < 1e-9 * r).then_some(r.round() as usize)
            });
            (dt, spp)
        }
        (None, None) => {
            return Err(Error::config("integrator.steps_per_period", "required (or integrator.dt)"))
        }
    };
    let n_steps = match (ig.periods, &ig.duration) {
        (Some(_), Some(_)) => {
            return Err(Error::config("integrator.duration", "give either integrator.periods or integrator.duration"))
        }
        (Some(np), None) => match steps_per_period {
            Some(spp) => np * spp,
            None => {
                let t = period.ok_or_else(|| Error::config("integrator.periods", "system has no period"))?;
                (np as f64 * t / dt).round() as usize
            }
        },
        (None, Some(text)) => {
            let d = positive("integrator.duration", ctx.q("integrator.duration", text, Dimension::Time)?)?;
            (d / dt).round() as usize
        }
        (None, None) => 0,
    };
    let record_every = ig.record_every.unwrap_or(1);
    if record_every == 0 {
        return Err(Error::config("integrator.record_every", "must be positive"));
    }

    let grid = if f.backend.is_quantum_grid() {
        if units.is_physical() {
            let need = required_grid_points(&system, start, hbar)
                .map(|n| format!("about {n:.1e} grid points"))
                .unwrap_or_else(|| "an unbounded grid".into());
            return Err(Error::config(
                "backend",
                format!(
                    "the {:?} backend is not run in physical units: resolving the state at this action needs {need}; \
                     use units.mode = \"dimensionless\" with a reduced hbar_eff",
                    f.backend
                ),
            ));
        }
        let gf = ig.grid.as_ref();
        let n = gf.map(|g| g.n).unwrap_or(DEFAULT_GRID_N);
        let grid = match gf.map(|g| (&g.x_min, &g.x_max)) {
            Some((Some(lo), Some(hi))) => Grid::new(
                ctx.q("integrator.grid.x_min", lo, Dimension::Length)?,
                ctx.q("integrator.grid.x_max", hi, Dimension::Length)?,
                n,
            ),
            Some((None, None)) | None => default_grid(&system, start, n).ok_or_else(|| {
                Error::config("integrator.grid", "no turning points; give integrator.grid.x_min and x_max")
            }),
            _ => return Err(Error::config("integrator.grid", "give both x_min and x_max")),
        }
        .map_err(|e| Error::config("integrator.grid", e.to_string()))?;
        Some(grid)
    } else {
        if ig.grid.is_some() {
            return Err(Error::config("integrator.grid", "only used by the sse and wigner-grid backends"));
        }
        None
    };

    let noise = match (&f.noise, f.backend) {
        (None, BackendKind::NoisyClassical) => {
            return Err(Error::config("noise", "required by the noisy-classical backend"))
        }
        (None, _) => ClassicalNoiseSpec::default(),
        (Some(_), b) if b != BackendKind::NoisyClassical => {
            return Err(Error::config("noise", "only used by the noisy-classical backend"))
        }
        (Some(nf), _) => {
            if nf.matched {
                if nf.d_p.is_some() || nf.d_x.is_some() {
                    return Err(Error::config("noise.matched", "matched noise takes no explicit coefficients"));
                }
                ClassicalNoiseSpec::matched(hbar, k, system.mass())
            } else {
                let d_p = ctx.opt("noise.d_p", &nf.d_p, Dimension::MomentumDiffusion)?.unwrap_or(0.0);
                let d_x = ctx.opt("noise.d_x", &nf.d_x, Dimension::PositionDiffusion)?.unwrap_or(0.0);
                ClassicalNoiseSpec::new(d_p, d_x).map_err(|e| Error::config("noise", e.to_string()))?
            }
        }
    };

    let lf = f.lyapunov.clone().unwrap_or_default();
    let d = LyapunovProtocol::default();
    let metric = match &lf.metric {
        Some(mf) => PhaseMetric::new(
            positive("lyapunov.metric.dx", ctx.q("lyapunov.metric.dx", &mf.dx, Dimension::Length)?)?,
            positive("lyapunov.metric.dp", ctx.q("lyapunov.metric.dp", &mf.dp, Dimension::Momentum)?)?,
        )
        .map_err(|e| Error::config("lyapunov.metric", e.to_string()))?,
        None if units.is_physical() || f.task != Task::Lyapunov => PhaseMetric::PAPER,
        None => return Err(Error::config("lyapunov.metric", "required in dimensionless mode")),
    };
    let lyapunov = LyapunovProtocol {
        n_fiducials: lf.n_fiducials.unwrap_or(d.n_fiducials),
        n_samples: lf.n_samples.unwrap_or(d.n_samples),
        neighbors: lf.neighbors.unwrap_or(d.neighbors),
        spacing_periods: lf.spacing_periods.unwrap_or(d.spacing_periods),
        horizon_periods: lf.horizon_periods.unwrap_or(d.horizon_periods),
        transient_periods: lf.transient_periods.unwrap_or(d.transient_periods),
        records_per_period: lf.records_per_period.unwrap_or(d.records_per_period),
        epsilon: lf.epsilon.unwrap_or(d.epsilon),
        fiducial_spread: lf.fiducial_spread.unwrap_or(d.fiducial_spread),
        metric,
        averaging: lf.averaging.unwrap_or_default(),
        neighbour_mode: lf.neighbour_mode.unwrap_or_default(),
        window: lf.window.unwrap_or_default(),
    };
    lyapunov
        .validate()
        .map_err(|e| Error::config("lyapunov", e.to_string().replace("invalid argument: ", "")))?;

    let sf = f.strobe.clone().unwrap_or_default();
    let histogram = match &sf.histogram {
        Some(h) => {
            let x0 = ctx.q("strobe.histogram.x_range[0]", &h.x_range[0], Dimension::Length)?;
            let x1 = ctx.q("strobe.histogram.x_range[1]", &h.x_range[1], Dimension::Length)?;
            let p0 = ctx.q("strobe.histogram.p_range[0]", &h.p_range[0], Dimension::Momentum)?;
            let p1 = ctx.q("strobe.histogram.p_range[1]", &h.p_range[1], Dimension::Momentum)?;
            if !(x1 > x0 && p1 > p0) || h.bins == 0 {
                return Err(Error::config("strobe.histogram", "ranges must increase and bins must be positive"));
            }
            Some(HistogramConfig {
                x_range: (x0, x1),
                p_range: (p0, p1),
                bins: h.bins,
            })
        }
        None => None,
    };
    let strobe = StrobeConfig {
        periods: sf.periods.unwrap_or(100),
        transient_periods: sf.transient_periods.unwrap_or(0),
        histogram,
    };
    if strobe.periods == 0 {
        return Err(Error::config("strobe.periods", "must be positive"));
    }

    let nf = f.snapshot.clone().unwrap_or_default();
    let mut at_steps = Vec::new();
    for (i, text) in nf.at.iter().flatten().enumerate() {
        let path = format!("snapshot.at[{i}]");
        let t = ctx.q(&path, text, Dimension::Time)?;
        let r = t / dt;
        if t < 0.0 || (r - r.round()).abs() > 1e-6 * r.max(1.0) {
            return Err(Error::config(path, format!("{t} is not a whole number of steps of {dt}")));
        }
        at_steps.push(r.round() as usize);
    }
    if at_steps.is_empty() {
        at_steps = vec![0, n_steps];
    }
    at_steps.sort_unstable();
    at_steps.dedup();
    let grid_n = grid.map(|g| g.n).unwrap_or(DEFAULT_GRID_N);
    let p_count = nf.p_count.unwrap_or(grid_n);
    if grid.is_some() && (p_count % 2 != 0 || p_count > grid_n || p_count == 0) {
        return Err(Error::config("snapshot.p_count", format!("must be even and at most {grid_n}")));
    }
    let snapshot = SnapshotConfig {
        at_steps,
        p_count,
        stride: nf.stride.unwrap_or((grid_n / 256).max(1)).max(1),
    };

    let cf = f.classicality.clone().unwrap_or_default();
    let classicality = ClassicalityConfig {
        margin: cf.margin.unwrap_or(10.0),
        typical: match &cf.typical {
            Some(pf) => PhaseState::new(
                ctx.q("classicality.typical.x", &pf.x, Dimension::Length)?,
                ctx.q("classicality.typical.p", &pf.p, Dimension::Momentum)?,
            ),
            None => start,
        },
    };
    if !(classicality.margin >= 1.0) {
        return Err(Error::config("classicality.margin", "must be at least 1"));
    }

    let name = f.name.clone().unwrap_or_else(|| "experiment".into());
    let output = PathBuf::from(f.output.clone().unwrap_or_else(|| format!("out/{name}")));

    Ok(ExperimentConfig {
        name,
        units,
        system,
        measurement,
        backend: f.backend,
        task: f.task,
        start,
        dt,
        period,
        steps_per_period,
        n_steps,
        record_every,
        grid,
        noise,
        lyapunov,
        strobe,
        snapshot,
        classicality,
        seed: f.seed,
        output,
    })
}
