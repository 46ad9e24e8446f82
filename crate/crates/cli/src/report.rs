//! SVG error-trace plot: raw and smoothed reconstruction error against time, with the
//! threshold, seizure onsets and pre-ictal intervals.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub title: String,
    /// Start time of each plotted segment, seconds.
    pub times_s: Vec<f64>,
    pub window_s: f64,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub tau: f64,
    pub onsets_s: Vec<f64>,
    pub preictal_len_s: f64,
    /// Alarm events as `[start_s, end_s)`.
    pub alarms: Vec<(f64, f64)>,
}

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Axes {
    t0: f64,
    t1: f64,
    ymax: f64,
}

impl Axes {
    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.t0) / (self.t1 - self.t0) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, self.ymax);
        HEIGHT - BOTTOM - v / self.ymax * (HEIGHT - TOP - BOTTOM)
    }
}

fn polyline(out: &mut String, class: &str, stroke: &str, ax: &Axes, t: &[f64], v: &[f64]) {
    let _ = write!(out, r#"<polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="1" points=""#);
    for (i, (&ti, &vi)) in t.iter().zip(v).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", ax.x(ti), ax.y(vi));
    }
    out.push_str("\"/>\n");
}

/// One `threshold` line, one `preictal` rect and one dashed `onset` line per event.
pub fn render_svg(tr: &Trace) -> String {
    let ends = tr.times_s.iter().map(|t| t + tr.window_s);
    let mut t0 = tr.times_s.iter().copied().fold(f64::INFINITY, f64::min);
    let mut t1 = ends.fold(f64::NEG_INFINITY, f64::max);
    for &on in &tr.onsets_s {
        t0 = t0.min((on - tr.preictal_len_s).max(0.0));
        t1 = t1.max(on);
    }
    if !t0.is_finite() || !t1.is_finite() {
        t0 = 0.0;
        t1 = 1.0;
    }
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    let top = tr
        .raw
        .iter()
        .chain(&tr.smoothed)
        .copied()
        .chain([tr.tau])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let ax = Axes {
        t0,
        t1,
        ymax: if top > 0.0 { top * 1.05 } else { 1.0 },
    };
    let (px0, px1) = (LEFT, WIDTH - RIGHT);
    let (py0, py1) = (TOP, HEIGHT - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&format!("Reconstruction error, {}", tr.title))
    );
    for &on in &tr.onsets_s {
        let a = ax.x((on - tr.preictal_len_s).max(0.0));
        let b = ax.x(on);
        let _ = writeln!(
            s,
            r##"<rect class="preictal" x="{a:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="#f4a261" fill-opacity="0.25"/>"##,
            b - a,
            py1 - py0
        );
    }
    for &(a, b) in &tr.alarms {
        let (xa, xb) = (ax.x(a), ax.x(b));
        let _ = writeln!(
            s,
            r##"<rect class="alarm" x="{xa:.2}" y="{:.2}" width="{:.2}" height="6" fill="#d62828"/>"##,
            py1 + 4.0,
            (xb - xa).max(1.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{px0}" y1="{py1}" x2="{px1}" y2="{py1}"/><line x1="{px0}" y1="{py0}" x2="{px0}" y2="{py1}"/></g>"#
    );
    let hours = (t1 - t0) / 3600.0;
    let step_h = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 24.0]
        .into_iter()
        .find(|st| hours / st <= 10.0)
        .unwrap_or(48.0);
    let mut tick = (t0 / 3600.0 / step_h).ceil() * step_h;
    while tick * 3600.0 <= t1 + 1e-9 {
        let x = ax.x(tick * 3600.0);
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            py1 + 24.0,
            (tick * 100.0).round() / 100.0
        );
        tick += step_h;
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">time (h)</text>"#,
        (px0 + px1) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">MSE</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0
    );
    polyline(&mut s, "raw-error", "#9aa5b1", &ax, &tr.times_s, &tr.raw);
    polyline(&mut s, "smoothed-error", "#1d3557", &ax, &tr.times_s, &tr.smoothed);
    let ty = ax.y(tr.tau);
    let _ = writeln!(
        s,
        r#"<line class="threshold" x1="{px0}" y1="{ty:.2}" x2="{px1}" y2="{ty:.2}" stroke="red" stroke-width="1.5"/>"#
    );
    for &on in &tr.onsets_s {
        let x = ax.x(on);
        let _ = writeln!(
            s,
            r#"<line class="onset" x1="{x:.2}" y1="{py0}" x2="{x:.2}" y2="{py1}" stroke="black" stroke-width="1.2" stroke-dasharray="6,4"/>"#
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="legend" x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        px1 - 4.0,
        py0 + 14.0,
        escape(&format!("threshold {:.4e}", tr.tau))
    );
    s.push_str("</svg>\n");
    s
}
