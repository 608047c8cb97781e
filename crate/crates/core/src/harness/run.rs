//! Executes a validated configuration and writes its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{BackendKind, ExperimentConfig, Task};
use super::csv::CsvTable;
use super::svg;
use crate::analysis::{
    lyapunov_paper_procedure, Backend, ClassicalBackend, ClosureBackend, Histogram2d,
    NoisyClassicalBackend, SseBackend, StroboscopicMap, WignerBackend,
};
use crate::closure::classicality_report;
use crate::error::{Error, Result};
use crate::noise::{stream_id, NoiseSource};
use crate::quantum::{wigner_transform, WignerGrid};
use crate::state::PhaseState;
use crate::units::Dimension;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
    /// Data rows, for CSV files.
    pub rows: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub task: Task,
    pub seed: u64,
    /// The canonical configuration, every value in canonical units.
    pub config: ExperimentConfig,
    pub hbar: f64,
    pub wall_time_s: f64,
    /// `ok`, `halted` (numerical stop) or `failed`.
    pub status: String,
    pub diagnostic: Option<String>,
    pub artifacts: Vec<Artifact>,
    pub results: serde_json::Value,
}

/// Files written by one run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunArtifacts {
    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

struct Outputs {
    files: Vec<(String, String, Option<usize>)>,
    results: serde_json::Value,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            results: serde_json::Value::Null,
        }
    }
    fn csv(&mut self, name: &str, table: CsvTable) {
        let rows = table.rows();
        self.files.push((name.into(), table.into_string(), Some(rows)));
    }
    fn text(&mut self, name: &str, text: String) {
        self.files.push((name.into(), text, None));
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(path, e))
}

/// Runs `cfg.task` and writes the CSV/SVG artifacts plus `manifest.json`
/// into `cfg.output`. On failure the manifest records the diagnostic
/// before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let clock = Instant::now();
    let outcome = match cfg.task {
        Task::Simulate => with_backend(cfg, Simulate { cfg }),
        Task::Lyapunov => with_backend(cfg, Lyapunov { cfg }),
        Task::Strobe => with_backend(cfg, Strobe { cfg }),
        Task::WignerSnapshot => wigner_snapshot(cfg),
        Task::CheckClassicality => check_classicality(cfg),
    };

    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        task: cfg.task,
        seed: cfg.seed,
        config: cfg.clone(),
        hbar: cfg.hbar(),
        wall_time_s: 0.0,
        status: "ok".into(),
        diagnostic: None,
        artifacts: Vec::new(),
        results: serde_json::Value::Null,
    };
    let err = match outcome {
        Ok(out) => {
            for (name, body, rows) in &out.files {
                write(&dir, name, body)?;
                manifest.artifacts.push(Artifact {
                    file: name.clone(),
                    sha256: format!("{:x}", Sha256::digest(body.as_bytes())),
                    bytes: body.len(),
                    rows: *rows,
                });
            }
            manifest.results = out.results;
            None
        }
        Err(e) => {
            manifest.status = match e {
                Error::NumericalHalt(_) => "halted",
                _ => "failed",
            }
            .into();
            manifest.diagnostic = Some(e.to_string());
            Some(e)
        }
    };
    manifest.wall_time_s = clock.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid(format!("manifest serialization failed: {e}")))?;
    write(&dir, "manifest.json", &(text + "\n"))?;
    match err {
        Some(e) => Err(e),
        None => Ok(RunArtifacts { dir, manifest }),
    }
}

trait Job {
    fn run<B: Backend>(self, backend: &B) -> Result<Outputs>;
}

fn with_backend<J: Job>(cfg: &ExperimentConfig, job: J) -> Result<Outputs> {
    let (sys, dt, meas, hbar) = (cfg.system, cfg.dt, cfg.measurement, cfg.hbar());
    let grid = || {
        cfg.grid
            .ok_or_else(|| Error::config("integrator.grid", "required by this backend"))
    };
    match cfg.backend {
        BackendKind::Classical => job.run(&ClassicalBackend { sys, dt }),
        BackendKind::NoisyClassical => job.run(&NoisyClassicalBackend {
            sys,
            dt,
            noise: cfg.noise,
        }),
        BackendKind::Closure => job.run(&ClosureBackend {
            sys,
            dt,
            meas,
            hbar,
            initial: None,
        }),
        BackendKind::Sse => job.run(&SseBackend::new(&sys, grid()?, hbar, dt, meas, None)?),
        BackendKind::WignerGrid => job.run(&WignerBackend::new(&sys, grid()?, hbar, dt, meas, None)?),
    }
}

fn state_columns(cfg: &ExperimentConfig, moments: bool) -> Vec<(&'static str, &'static str)> {
    let mut cols = vec![
        ("t", cfg.unit_label(Dimension::Time)),
        ("x", cfg.unit_label(Dimension::Length)),
        ("p", cfg.unit_label(Dimension::Momentum)),
    ];
    if moments {
        let phys = cfg.units.is_physical();
        cols.extend([
            ("var_x", cfg.unit_label(Dimension::Area)),
            ("var_p", if phys { "pg^2*um^2/s^2" } else { "dimless" }),
            ("cov_xp", if phys { "pg*um^2/s" } else { "dimless" }),
        ]);
    }
    cols
}

struct Simulate<'a> {
    cfg: &'a ExperimentConfig,
}

impl Job for Simulate<'_> {
    fn run<B: Backend>(self, b: &B) -> Result<Outputs> {
        let cfg = self.cfg;
        let mut state = b.prepare(cfg.start)?;
        let mut noise = NoiseSource::new(cfg.seed, stream_id(0, 0));
        let with_moments = b.moments(&state).is_some();
        let mut table = CsvTable::new(&state_columns(cfg, with_moments));
        let mut path = Vec::new();
        let mut push = |i: usize, s: &B::State, table: &mut CsvTable| {
            let t = i as f64 * cfg.dt;
            let pt = b.phase_point(s);
            let mut row = vec![t, pt.x, pt.p];
            if let Some(g) = b.moments(s) {
                row.extend([g.var_x, g.var_p, g.cov_xp]);
            }
            table.row(&row);
            path.push((pt.x, pt.p));
        };
        push(0, &state, &mut table);
        for i in 0..cfg.n_steps {
            b.step(&mut state, i as f64 * cfg.dt, &mut noise)?;
            if (i + 1) % cfg.record_every == 0 {
                push(i + 1, &state, &mut table);
            }
        }
        let end = b.phase_point(&state);
        let mut out = Outputs::new();
        out.text(
            "trajectory.svg",
            svg::line(
                &format!("{} ({})", cfg.name, b.name()),
                &format!("x [{}]", cfg.unit_label(Dimension::Length)),
                &format!("p [{}]", cfg.unit_label(Dimension::Momentum)),
                &path,
                None,
            ),
        );
        out.csv("trajectory.csv", table);
        out.results = serde_json::json!({
            "backend": b.name(),
            "steps": cfg.n_steps,
            "final": to_json(&end),
            "final_moments": b.moments(&state).map(|g| to_json(&g)),
        });
        Ok(out)
    }
}

struct Lyapunov<'a> {
    cfg: &'a ExperimentConfig,
}

impl Job for Lyapunov<'_> {
    fn run<B: Backend>(self, b: &B) -> Result<Outputs> {
        let cfg = self.cfg;
        let (period, _) = cfg.require_period("the Lyapunov protocol")?;
        let est = lyapunov_paper_procedure(b, cfg.start, period, &cfg.lyapunov, cfg.seed)?;
        let mut table = CsvTable::new(&[
            ("t", cfg.unit_label(Dimension::Time)),
            ("ln_mean_separation", "ln(normalized)"),
        ]);
        for &(t, y) in &est.curve {
            table.row(&[t, y]);
        }
        let (t0, t1) = (est.curve[est.fit.start].0, est.curve[est.fit.end - 1].0);
        let overlay = (
            t0,
            est.fit.intercept + est.fit.slope * t0,
            t1,
            est.fit.intercept + est.fit.slope * t1,
        );
        let mut out = Outputs::new();
        out.text(
            "divergence.svg",
            svg::line(
                &format!("{}: λ = {:.4} per period ({})", cfg.name, est.lambda_per_period, b.name()),
                &format!("t [{}]", cfg.unit_label(Dimension::Time)),
                "ln mean separation",
                &est.curve,
                Some(overlay),
            ),
        );
        out.csv("divergence.csv", table);
        let mut summary = to_json(&est);
        if let Some(obj) = summary.as_object_mut() {
            obj.remove("curve");
            obj.insert("backend".into(), b.name().into());
        }
        out.results = summary;
        Ok(out)
    }
}

/// Runs `b` for `transient + periods` drive periods and samples the
/// centroid after each post-transient period.
pub fn strobe_samples<B: Backend>(
    b: &B,
    start: PhaseState,
    steps_per_period: usize,
    transient: usize,
    periods: usize,
    noise: &mut NoiseSource,
) -> Result<Vec<(f64, PhaseState)>> {
    let mut state = b.prepare(start)?;
    let dt = b.dt();
    let mut out = Vec::with_capacity(periods);
    let mut i: usize = 0;
    for n in 0..transient + periods {
        for _ in 0..steps_per_period {
            b.step(&mut state, i as f64 * dt, noise)?;
            i += 1;
        }
        if n >= transient {
            out.push((i as f64 * dt, b.phase_point(&state)));
        }
    }
    Ok(out)
}

struct Strobe<'a> {
    cfg: &'a ExperimentConfig,
}

impl Job for Strobe<'_> {
    fn run<B: Backend>(self, b: &B) -> Result<Outputs> {
        let cfg = self.cfg;
        let (period, spp) = cfg.require_period("the stroboscopic map")?;
        let mut noise = NoiseSource::new(cfg.seed, stream_id(0, 0));
        let samples = strobe_samples(
            b,
            cfg.start,
            spp,
            cfg.strobe.transient_periods,
            cfg.strobe.periods,
            &mut noise,
        )?;
        let map = StroboscopicMap { period, samples };
        let mut table = CsvTable::new(&[
            ("n", ""),
            ("t", cfg.unit_label(Dimension::Time)),
            ("x", cfg.unit_label(Dimension::Length)),
            ("p", cfg.unit_label(Dimension::Momentum)),
        ]);
        for (n, (t, s)) in map.samples.iter().enumerate() {
            table.row(&[(n + 1) as f64, *t, s.x, s.p]);
        }
        let mut out = Outputs::new();
        let pts: Vec<(f64, f64)> = map.samples.iter().map(|(_, s)| (s.x, s.p)).collect();
        out.text(
            "strobe.svg",
            svg::scatter(
                &format!("{}: stroboscopic map ({})", cfg.name, b.name()),
                &format!("x [{}]", cfg.unit_label(Dimension::Length)),
                &format!("p [{}]", cfg.unit_label(Dimension::Momentum)),
                &pts,
            ),
        );
        out.csv("strobe.csv", table);
        let mut results = serde_json::json!({ "backend": b.name(), "samples": map.samples.len() });
        if let Some(h) = &cfg.strobe.histogram {
            let hist = Histogram2d::build(&map.points(), h.x_range, h.p_range, h.bins)?;
            let mut ht = CsvTable::new(&[
                ("x_center", cfg.unit_label(Dimension::Length)),
                ("p_center", cfg.unit_label(Dimension::Momentum)),
                ("weight", ""),
            ]);
            let (wx, wp) = (
                (h.x_range.1 - h.x_range.0) / h.bins as f64,
                (h.p_range.1 - h.p_range.0) / h.bins as f64,
            );
            for i in 0..h.bins {
                for j in 0..h.bins {
                    ht.row(&[
                        h.x_range.0 + (i as f64 + 0.5) * wx,
                        h.p_range.0 + (j as f64 + 0.5) * wp,
                        hist.weights[i * h.bins + j],
                    ]);
                }
            }
            out.csv("strobe_histogram.csv", ht);
            results["occupied_cells"] = hist.occupied().into();
            results["outside"] = hist.outside.into();
        }
        out.results = results;
        Ok(out)
    }
}

fn wigner_table(cfg: &ExperimentConfig, w: &WignerGrid, stride: usize) -> CsvTable {
    let mut t = CsvTable::new(&[
        ("x", cfg.unit_label(Dimension::Length)),
        ("p", cfg.unit_label(Dimension::Momentum)),
        ("w", if cfg.units.is_physical() { "1/(pg*um^2/s)" } else { "dimless" }),
    ]);
    for i in (0..w.n_x()).step_by(stride) {
        for j in (0..w.n_p()).step_by(stride) {
            t.row(&[w.x()[i], w.p()[j], w.value(i, j)]);
        }
    }
    t
}

fn wigner_snapshot(cfg: &ExperimentConfig) -> Result<Outputs> {
    let grid = cfg.grid.ok_or_else(|| {
        Error::config("backend", "wigner-snapshot needs the sse or wigner-grid backend")
    })?;
    let hbar = cfg.hbar();
    let mut noise = NoiseSource::new(cfg.seed, stream_id(0, 0));
    let last = *cfg.snapshot.at_steps.last().unwrap_or(&0);
    let mut out = Outputs::new();
    let mut summary = Vec::new();
    let mut emit = |step: usize, w: &WignerGrid, out: &mut Outputs| {
        out.csv(&format!("wigner_step{step:08}.csv"), wigner_table(cfg, w, cfg.snapshot.stride));
        summary.push(serde_json::json!({
            "step": step,
            "t": step as f64 * cfg.dt,
            "norm": w.norm(),
            "min_value": w.min_value(),
            "moments": to_json(&w.moments()),
        }));
    };
    match cfg.backend {
        BackendKind::Sse => {
            let b = SseBackend::new(&cfg.system, grid, hbar, cfg.dt, cfg.measurement, None)?;
            let mut psi = b.prepare(cfg.start)?;
            for i in 0..=last {
                if cfg.snapshot.at_steps.binary_search(&i).is_ok() {
                    emit(i, &wigner_transform(&psi, cfg.snapshot.p_count)?, &mut out);
                }
                if i < last {
                    b.step(&mut psi, i as f64 * cfg.dt, &mut noise)?;
                }
            }
        }
        BackendKind::WignerGrid => {
            let b = WignerBackend::new(&cfg.system, grid, hbar, cfg.dt, cfg.measurement, None)?;
            let mut w = b.prepare(cfg.start)?;
            for i in 0..=last {
                if cfg.snapshot.at_steps.binary_search(&i).is_ok() {
                    emit(i, &w, &mut out);
                }
                if i < last {
                    b.step(&mut w, i as f64 * cfg.dt, &mut noise)?;
                }
            }
        }
        _ => {
            return Err(Error::config(
                "backend",
                "wigner-snapshot needs the sse or wigner-grid backend",
            ))
        }
    }
    out.results = serde_json::json!({ "snapshots": summary });
    Ok(out)
}

fn check_classicality(cfg: &ExperimentConfig) -> Result<Outputs> {
    let c = &cfg.classicality;
    let report = classicality_report(&cfg.system, c.typical, 0.0, &cfg.measurement, cfg.hbar(), c.margin)?;
    let mut out = Outputs::new();
    let mut v = to_json(&report);
    v["window_decades"] = report.window_decades().into();
    out.text(
        "classicality.json",
        serde_json::to_string_pretty(&v).unwrap_or_default() + "\n",
    );
    out.results = v;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{presets, validate_config};

    fn config(preset: &str, f: impl FnOnce(&mut serde_json::Value), dir: &Path) -> ExperimentConfig {
        let mut v: serde_json::Value = serde_json::from_str(presets::preset(preset).unwrap()).unwrap();
        f(&mut v);
        v["output"] = dir.to_string_lossy().into_owned().into();
        validate_config(&v.to_string()).unwrap()
    }

    #[test]
    fn strobe_rows_equal_periods() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            "paper-duffing",
            |v| {
                v["task"] = "strobe".into();
                v["integrator"]["steps_per_period"] = 500.into();
                v["strobe"]["periods"] = 40.into();
            },
            dir.path(),
        );
        let art = run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(art.path("strobe.csv")).unwrap();
        assert_eq!(text.lines().count(), 41);
        assert!(text.starts_with("n,t [s],x [um],p [pg*um/s]"));
        let a = art.manifest.artifacts.iter().find(|a| a.file == "strobe.csv").unwrap();
        assert_eq!(a.rows, Some(40));
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let edit = |v: &mut serde_json::Value| {
            v["integrator"]["steps_per_period"] = 2000.into();
            v["integrator"]["periods"] = 2.into();
            v["integrator"]["record_every"] = 10.into();
        };
        let a = run_experiment(&config("paper-duffing", edit, d1.path())).unwrap();
        let b = run_experiment(&config("paper-duffing", edit, d2.path())).unwrap();
        for (x, y) in a.manifest.artifacts.iter().zip(&b.manifest.artifacts) {
            assert_eq!(x.sha256, y.sha256, "{}", x.file);
        }
        let ta = std::fs::read(a.path("trajectory.csv")).unwrap();
        assert_eq!(ta, std::fs::read(b.path("trajectory.csv")).unwrap());
    }

    #[test]
    fn halt_recorded_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        // dt far too coarse for the measurement rate
        let cfg = config(
            "paper-duffing",
            |v| {
                v["integrator"]["steps_per_period"] = 1.into();
                v["integrator"]["periods"] = 200.into();
            },
            dir.path(),
        );
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["status"], "halted");
        assert!(m["diagnostic"].as_str().unwrap().contains("numerical halt"));
    }
}
