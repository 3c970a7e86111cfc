//! Minimal standalone SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::engine::Sample;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Plot {
    /// DC bus voltage in per-unit against time.
    pub fn v_dc(title: &str, records: &[Sample<f64>], v_dc_star: f64) -> Self {
        Self {
            title: title.into(),
            x_label: "time (s)".into(),
            y_label: "DC bus voltage (p.u.)".into(),
            series: vec![Series {
                label: "v_dc".into(),
                points: records.iter().map(|s| (s.t, s.v_dc / v_dc_star)).collect(),
            }],
        }
    }

    /// Storage rates in per-unit of `s_base`.
    pub fn energy_rate(title: &str, records: &[Sample<f64>], s_base: f64) -> Self {
        let series = |label: &str, f: fn(&Sample<f64>) -> f64| Series {
            label: label.into(),
            points: records.iter().map(|s| (s.t, f(s) / s_base)).collect(),
        };
        Self {
            title: title.into(),
            x_label: "time (s)".into(),
            y_label: "dH/dt (p.u.)".into(),
            series: vec![
                series("closed loop", |s| s.rates.h_cl_rate),
                series("plant", |s| s.rates.plant.total),
            ],
        }
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.01 * lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Keeps the first, minimum, maximum and last point of each pixel column.
fn thin(points: &[(f64, f64)], x0: f64, x1: f64, columns: usize) -> Vec<(f64, f64)> {
    if points.len() <= 4 * columns {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(4 * columns);
    let mut bucket: Vec<(f64, f64)> = Vec::new();
    let mut current = usize::MAX;
    let flush = |bucket: &mut Vec<(f64, f64)>, out: &mut Vec<(f64, f64)>| {
        if bucket.is_empty() {
            return;
        }
        let mut keep = vec![0, bucket.len() - 1];
        let (mut lo, mut hi) = (0, 0);
        for (k, p) in bucket.iter().enumerate() {
            if p.1 < bucket[lo].1 {
                lo = k;
            }
            if p.1 > bucket[hi].1 {
                hi = k;
            }
        }
        keep.extend([lo, hi]);
        keep.sort_unstable();
        keep.dedup();
        out.extend(keep.into_iter().map(|k| bucket[k]));
        bucket.clear();
    };
    for &p in points {
        let c = (((p.0 - x0) / (x1 - x0)) * columns as f64).floor().max(0.0) as usize;
        if c != current {
            flush(&mut bucket, &mut out);
            current = c;
        }
        bucket.push(p);
    }
    flush(&mut bucket, &mut out);
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart to a string, or `None` when there is nothing to draw.
pub fn render_svg(plot: &Plot) -> Option<String> {
    let all = || plot.series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(all().map(|p| p.0))?;
    let (y0, y1) = range(all().map(|p| p.1))?;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );
    for (axis, (lo, hi)) in [('x', (x0, x1)), ('y', (y0, y1))] {
        let step = nice_step(hi - lo);
        let mut v = (lo / step).ceil() * step;
        while v <= hi {
            let text = label(v, step);
            if axis == 'x' {
                let x = sx(v);
                let _ = writeln!(
                    o,
                    r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{text}</text>"##,
                    TOP + ph,
                    TOP + ph + 18.0
                );
            } else {
                let y = sy(v);
                let _ = writeln!(
                    o,
                    r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{text}</text>"##,
                    LEFT + pw,
                    LEFT - 6.0,
                    y + 4.0
                );
            }
            v += step;
        }
    }
    let _ = writeln!(
        o,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        o,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        o,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (k, s) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = thin(&s.points, x0, x1, pw as usize)
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            o,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
        if plot.series.len() > 1 {
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 130.0;
            let _ = writeln!(
                o,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
    o.push_str("</svg>\n");
    Some(o)
}

/// Writes the chart; returns `false` (and writes nothing) when it is empty.
pub fn emit_plot_svg(plot: &Plot, path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    match render_svg(plot) {
        Some(svg) => {
            std::fs::write(path, svg).map_err(|e| Error::io(path, e))?;
            Ok(true)
        }
        None => {
            log::warn!("nothing to plot for {}", path.display());
            Ok(false)
        }
    }
}
