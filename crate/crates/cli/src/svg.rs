//! Minimal SVG line and bar charts.

use std::fmt::Write;

use crate::args::ChartKind;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Chart {
    pub kind: ChartKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Category positions along the x axis, in drawing order.
    pub x: Vec<String>,
    /// One value per x position; `None` leaves a gap.
    pub series: Vec<(String, Vec<Option<f64>>)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round step of about `span / 5`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

impl Chart {
    fn y_range(&self) -> (f64, f64) {
        let vals = self.series.iter().flat_map(|s| s.1.iter().flatten().copied());
        let (mut lo, mut hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        if self.kind == ChartKind::Bar {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        if hi == lo {
            let pad = if hi == 0.0 { 1.0 } else { hi.abs() * 0.1 };
            return (lo - pad, hi + pad);
        }
        let pad = (hi - lo) * 0.05;
        (if self.kind == ChartKind::Bar && lo == 0.0 { 0.0 } else { lo - pad }, hi + pad)
    }

    pub fn render(&self) -> String {
        let (lo, hi) = self.y_range();
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let sy = |v: f64| TOP + ph * (1.0 - (v - lo) / (hi - lo));
        let n = self.x.len().max(1) as f64;
        let slot = pw / n;
        let sx = |i: usize| LEFT + slot * (i as f64 + 0.5);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(&self.title));

        let step = tick_step(hi - lo);
        let mut t = (lo / step).ceil() * step;
        while t <= hi + step * 1e-9 {
            let y = sy(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_tick(t, step));
            t += step;
        }
        let every = (self.x.len() / 16).max(1);
        for (i, label) in self.x.iter().enumerate().filter(|(i, _)| i % every == 0) {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(i), TOP + ph + 18.0, esc(label));
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 16.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        let k = self.series.len().max(1) as f64;
        for (j, (name, values)) in self.series.iter().enumerate() {
            let color = PALETTE[j % PALETTE.len()];
            match self.kind {
                ChartKind::Line => {
                    // gaps split the polyline
                    let mut run: Vec<String> = Vec::new();
                    let flush = |run: &mut Vec<String>, s: &mut String| {
                        if run.len() > 1 {
                            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, run.join(" "));
                        }
                        run.clear();
                    };
                    for (i, v) in values.iter().enumerate() {
                        match v {
                            Some(v) => {
                                run.push(format!("{:.2},{:.2}", sx(i), sy(*v)));
                                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(i), sy(*v));
                            }
                            None => flush(&mut run, &mut s),
                        }
                    }
                    flush(&mut run, &mut s);
                }
                ChartKind::Bar => {
                    let bw = slot * 0.8 / k;
                    let base = sy(lo.max(0.0).min(hi));
                    for (i, v) in values.iter().enumerate() {
                        let Some(v) = v else { continue };
                        let x = sx(i) - slot * 0.4 + bw * j as f64;
                        let (y0, y1) = (sy(*v).min(base), sy(*v).max(base));
                        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y0:.2}" width="{bw:.2}" height="{:.2}" fill="{color}"/>"#, y1 - y0);
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * j as f64;
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, W - RIGHT + 12.0, ly - 10.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, W - RIGHT + 30.0, esc(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize + 1;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}
