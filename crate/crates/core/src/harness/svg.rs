//! Standalone SVG scatter and line plots.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(points: &[(f64, f64)]) -> Self {
        let finite = points.iter().filter(|(a, b)| a.is_finite() && b.is_finite());
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(a, b) in finite {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                return (0.0, 1.0);
            }
            let d = (r.1 - r.0).max(1e-300) * 0.05;
            (r.0 - d, r.1 + d)
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn map(&self, (a, b): (f64, f64)) -> (f64, f64) {
        (
            PAD + (a - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD),
            H - PAD - (b - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD),
        )
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    let ticks = [
        (f.x.0, PAD, H - PAD + 16.0, "start"),
        (f.x.1, W - PAD, H - PAD + 16.0, "end"),
    ];
    for (v, x, y, anchor) in ticks {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3e}</text>"#);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, PAD - 4.0, H - PAD, f.y.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, PAD - 4.0, PAD + 10.0, f.y.1);
    s
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter plot of `points`.
pub fn scatter(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let f = Frame::fit(points);
    let mut s = open(title, xlabel, ylabel, &f);
    for &p in points.iter().filter(|(a, b)| a.is_finite() && b.is_finite()) {
        let (x, y) = f.map(p);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="navy"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot of `points`, with an optional straight-line overlay `(t0, y0, t1, y1)`.
pub fn line(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64)],
    overlay: Option<(f64, f64, f64, f64)>,
) -> String {
    let f = Frame::fit(points);
    let mut s = open(title, xlabel, ylabel, &f);
    let path: Vec<String> = points
        .iter()
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|&p| {
            let (x, y) = f.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="navy" points="{}"/>"#, path.join(" "));
    if let Some((t0, y0, t1, y1)) = overlay {
        let (a, b) = (f.map((t0, y0)), f.map((t1, y1)));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            a.0, a.1, b.0, b.1
        );
    }
    s.push_str("</svg>\n");
    s
}
