//! Minimal SVG emission: line plots and scalogram heatmaps.
//!
//! Plots are a reading aid over the CSV artifacts; nothing downstream parses
//! them, so this stays a straight-line renderer with fixed geometry.

use std::path::Path;

use crate::errors::{with_path, Result};

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Per-series cap on polyline vertices; raw records can run to 200k samples.
const MAX_POINTS: usize = 4000;
/// Column cap for heatmap rasterization.
const MAX_HEAT_COLS: usize = 256;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn from_series(series: &[Series<'_>]) -> Self {
        let mut axes =
            Axes { x_lo: f64::INFINITY, x_hi: f64::NEG_INFINITY, y_lo: f64::INFINITY, y_hi: f64::NEG_INFINITY };
        for s in series {
            for &(x, y) in s.points {
                if x.is_finite() && y.is_finite() {
                    axes.x_lo = axes.x_lo.min(x);
                    axes.x_hi = axes.x_hi.max(x);
                    axes.y_lo = axes.y_lo.min(y);
                    axes.y_hi = axes.y_hi.max(y);
                }
            }
        }
        if !axes.x_lo.is_finite() || axes.x_lo == axes.x_hi {
            axes.x_lo -= 0.5;
            axes.x_hi += 0.5;
        }
        if !axes.y_lo.is_finite() || axes.y_lo == axes.y_hi {
            axes.y_lo -= 0.5;
            axes.y_hi += 0.5;
        }
        axes
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (H - 2.0 * MARGIN)
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, axes: &Axes) {
    use std::fmt::Write;
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{tx}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n\
         <text x=\"{tx}\" y=\"{bly}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{mly}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {mly})\">{y_label}</text>\n\
         <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n",
        tx = W / 2.0,
        bly = H - 16.0,
        mly = H / 2.0,
        pw = W - 2.0 * MARGIN,
        ph = H - 2.0 * MARGIN,
    );
    for k in 0..=4 {
        let fx = axes.x_lo + (axes.x_hi - axes.x_lo) * k as f64 / 4.0;
        let fy = axes.y_lo + (axes.y_hi - axes.y_lo) * k as f64 / 4.0;
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            axes.px(fx),
            H - MARGIN + 18.0,
            fmt_tick(fx),
            MARGIN - 6.0,
            axes.py(fy) + 4.0,
            fmt_tick(fy),
        );
    }
}

pub fn line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> Result<()> {
    use std::fmt::Write;
    let axes = Axes::from_series(series);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, &axes);
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
        let pts: Vec<String> = s
            .points
            .iter()
            .step_by(stride)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            W - MARGIN - 120.0,
            MARGIN + 16.0 + 16.0 * si as f64,
            s.label
        );
    }
    out.push_str("</svg>\n");
    with_path(std::fs::write(path, out), path)
}

/// Five-stop dark-to-bright color ramp.
fn ramp(u: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let u = u.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (u as usize).min(STOPS.len() - 2);
    let f = u - i as f64;
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(STOPS[i].0, STOPS[i + 1].0),
        mix(STOPS[i].1, STOPS[i + 1].1),
        mix(STOPS[i].2, STOPS[i + 1].2)
    )
}

/// Scalogram heatmap; `magnitude` is indexed `[freq][time]` and the frequency
/// axis is drawn on a log scale.
pub fn heatmap(
    path: &Path,
    title: &str,
    times: &[f64],
    freqs: &[f64],
    magnitude: &[Vec<f64>],
) -> Result<()> {
    use std::fmt::Write;
    let axes = Axes {
        x_lo: *times.first().unwrap_or(&0.0),
        x_hi: *times.last().unwrap_or(&1.0),
        y_lo: freqs.first().map_or(0.0, |f| f.log10()),
        y_hi: freqs.last().map_or(1.0, |f| f.log10()),
    };
    let mut out = String::new();
    frame(&mut out, title, "t [s]", "f [Hz] (log)", &axes);
    let stride = times.len().div_ceil(MAX_HEAT_COLS).max(1);
    let peak = magnitude
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for (fi, row) in magnitude.iter().enumerate() {
        let y1 = axes.py(freqs[fi].log10());
        let y0 = if fi + 1 < freqs.len() { axes.py(freqs[fi + 1].log10()) } else { MARGIN };
        for ti in (0..times.len()).step_by(stride) {
            let x0 = axes.px(times[ti]);
            let x1 = if ti + stride < times.len() { axes.px(times[ti + stride]) } else { W - MARGIN };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                x0,
                y0,
                (x1 - x0).max(0.1),
                (y1 - y0).max(0.1),
                ramp(row[ti] / peak)
            );
        }
    }
    out.push_str("</svg>\n");
    with_path(std::fs::write(path, out), path)
}
