use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line through `(t[i], y[i])` for `i in start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    pub start: usize,
    pub end: usize,
}

/// Least-squares fit over all points.
pub fn linear_fit(t: &[f64], y: &[f64]) -> Result<LinearFit> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::invalid("linear fit needs two or more paired points"));
    }
    let sums = Sums::new(t, y);
    Ok(sums.fit(0, t.len()))
}

struct Sums {
    origin: f64,
    st: Vec<f64>,
    sy: Vec<f64>,
    stt: Vec<f64>,
    sty: Vec<f64>,
    syy: Vec<f64>,
}

impl Sums {
    fn new(t: &[f64], y: &[f64]) -> Self {
        let origin = t[0];
        let n = t.len();
        let mut s = Sums {
            origin,
            st: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            stt: vec![0.0; n + 1],
            sty: vec![0.0; n + 1],
            syy: vec![0.0; n + 1],
        };
        for i in 0..n {
            let (a, b) = (t[i] - origin, y[i]);
            s.st[i + 1] = s.st[i] + a;
            s.sy[i + 1] = s.sy[i] + b;
            s.stt[i + 1] = s.stt[i] + a * a;
            s.sty[i + 1] = s.sty[i] + a * b;
            s.syy[i + 1] = s.syy[i] + b * b;
        }
        s
    }

    fn fit(&self, start: usize, end: usize) -> LinearFit {
        let n = (end - start) as f64;
        let st = self.st[end] - self.st[start];
        let sy = self.sy[end] - self.sy[start];
        let stt = self.stt[end] - self.stt[start];
        let sty = self.sty[end] - self.sty[start];
        let syy = self.syy[end] - self.syy[start];
        let vtt = stt - st * st / n;
        let vty = sty - st * sy / n;
        let vyy = syy - sy * sy / n;
        let slope = vty / vtt;
        let intercept_local = (sy - slope * st) / n;
        let r_squared = if vyy > 0.0 {
            (vty * vty / (vtt * vyy)).min(1.0)
        } else {
            1.0
        };
        let resid = (vyy - slope * vty).max(0.0);
        let slope_stderr = if n > 2.0 {
            (resid / (n - 2.0) / vtt).sqrt()
        } else {
            f64::NAN
        };
        LinearFit {
            slope,
            intercept: intercept_local - slope * self.origin,
            r_squared,
            slope_stderr,
            start,
            end,
        }
    }
}

/// How the linear region of a divergence curve is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowRule {
    /// The window starts once Δ̄ exceeds this multiple of its initial value.
    pub growth_factor: f64,
    /// The window ends before Δ̄ reaches this fraction of the attractor diameter.
    pub saturation_fraction: f64,
    /// Required coefficient of determination.
    pub min_r_squared: f64,
    /// Below this r² the estimate is flagged unreliable.
    pub reliable_r_squared: f64,
    pub min_points: usize,
    /// Manual override of the window, in record indices `[start, end)`.
    pub fixed: Option<(usize, usize)>,
}

impl Default for WindowRule {
    fn default() -> Self {
        Self {
            growth_factor: 3.0,
            saturation_fraction: 0.25,
            min_r_squared: 0.98,
            reliable_r_squared: 0.9,
            min_points: 5,
            fixed: None,
        }
    }
}

/// Linear region of `ln Δ̄(t)` selected by `rule`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    pub fit: LinearFit,
    /// Range allowed by the growth and saturation limits.
    pub admissible: (usize, usize),
    /// Whether a window meeting `min_r_squared` was found; otherwise the
    /// whole admissible range was fitted.
    pub met_threshold: bool,
}

/// Picks the longest window with r² ≥ `rule.min_r_squared` inside the
/// admissible range (ties go to the larger r²). The initial value is the
/// first finite, positive separation.
pub fn select_window(
    t: &[f64],
    ln_sep: &[f64],
    diameter: f64,
    rule: &WindowRule,
) -> Result<WindowSelection> {
    if t.len() != ln_sep.len() {
        return Err(Error::invalid("time and divergence series differ in length"));
    }
    let n = t.len();
    if let Some((s, e)) = rule.fixed {
        if e > n || e < s + 2 {
            return Err(Error::invalid(format!(
                "fixed fit window [{s}, {e}) is outside the {n}-point curve"
            )));
        }
        let sums = Sums::new(&t[s..e], &ln_sep[s..e]);
        let mut fit = sums.fit(0, e - s);
        fit.start = s;
        fit.end = e;
        return Ok(WindowSelection {
            fit,
            admissible: (s, e),
            met_threshold: fit.r_squared >= rule.min_r_squared,
        });
    }

    let first = ln_sep
        .iter()
        .position(|v| v.is_finite())
        .ok_or_else(|| Error::halt("divergence curve is identically zero"))?;
    let threshold = ln_sep[first] + rule.growth_factor.ln();
    let start = (first..n)
        .find(|&i| ln_sep[i] > threshold)
        .ok_or_else(|| Error::halt("separation never grows past the start threshold"))?;
    let ceiling = (rule.saturation_fraction * diameter).ln();
    let end = (start..n).find(|&i| ln_sep[i] >= ceiling).unwrap_or(n);
    if end < start + 3 {
        return Err(Error::halt(format!(
            "no pre-saturation region: only {} points between growth onset and saturation",
            end.saturating_sub(start)
        )));
    }

    let sums = Sums::new(&t[start..end], &ln_sep[start..end]);
    let len = end - start;
    let min_pts = rule.min_points.max(3).min(len);
    let mut best: Option<LinearFit> = None;
    'outer: for width in (min_pts..=len).rev() {
        for s in 0..=len - width {
            let f = sums.fit(s, s + width);
            if f.r_squared >= rule.min_r_squared
                && best.is_none_or(|b| f.r_squared > b.r_squared)
            {
                best = Some(f);
            }
        }
        if best.is_some() {
            break 'outer;
        }
    }
    let (mut fit, met) = match best {
        Some(f) => (f, true),
        None => (sums.fit(0, len), false),
    };
    fit.start += start;
    fit.end += start;
    Ok(WindowSelection {
        fit,
        admissible: (start, end),
        met_threshold: met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 - 0.7 * t).collect();
        let f = linear_fit(&t, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-10);
    }

    #[test]
    fn saturating_curve_excludes_plateau() {
        // ln Δ grows at rate 0.5 then saturates at ln 10
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|t| {
                let d = 1e-4 * (0.5 * t).exp();
                (d * 10.0 / (d + 10.0)).ln()
            })
            .collect();
        let sel = select_window(&t, &y, 10.0, &WindowRule::default()).unwrap();
        assert!(sel.met_threshold);
        assert!((sel.fit.slope - 0.5).abs() < 0.01, "{:?}", sel.fit);
        assert!(y[sel.fit.end - 1] < 2.5f64.ln());
    }

    #[test]
    fn inverted_oscillator_rate() {
        // separation of neighbours under V = −½αx², from the exact linear flow
        let (alpha, m) = (4.0_f64, 1.0);
        let g = (alpha / m).sqrt();
        let metric = crate::analysis::PhaseMetric::new(1.0, 1.0).unwrap();
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 0.02).collect();
        let dirs = [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8), (-0.3, 0.9)];
        let y: Vec<f64> = t
            .iter()
            .map(|&t| {
                let (c, s) = ((g * t).cosh(), (g * t).sinh());
                let mean = dirs
                    .iter()
                    .map(|&(dx, dp)| {
                        let x = 1e-8 * (dx * c + dp / (m * g) * s);
                        let p = 1e-8 * (dx * m * g * s + dp * c);
                        metric.distance(
                            crate::state::PhaseState::new(x, p),
                            crate::state::PhaseState::default(),
                        )
                    })
                    .sum::<f64>()
                    / dirs.len() as f64;
                mean.ln()
            })
            .collect();
        let sel = select_window(&t, &y, 1e6, &WindowRule::default()).unwrap();
        assert!(((sel.fit.slope - g) / g).abs() < 0.02, "{:?}", sel.fit);
    }

    #[test]
    fn fixed_window_respected() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| t * t).collect();
        let rule = WindowRule {
            fixed: Some((2, 6)),
            ..WindowRule::default()
        };
        let sel = select_window(&t, &y, 1.0, &rule).unwrap();
        assert_eq!((sel.fit.start, sel.fit.end), (2, 6));
        assert!((sel.fit.slope - 7.0).abs() < 1e-9);
    }

    #[test]
    fn flat_curve_is_an_error() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y = vec![0.0; 20];
        assert!(select_window(&t, &y, 10.0, &WindowRule::default()).is_err());
    }
}
