//! Static SVG scatter plot with per-group confidence ellipses.

use std::fmt::Write;

use anyhow::Result;
use fmds_core::metrics::{confidence_ellipse, group_moments, Ellipse};
use fmds_core::{Embedding, LabelVector};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const LEGEND: f64 = 110.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Plot {
    pub svg: String,
    pub warnings: Vec<String>,
}

fn color(label: usize) -> &'static str {
    PALETTE[label % PALETTE.len()]
}

/// Half extents of the axis-aligned box around an ellipse.
fn half_extent(e: &Ellipse) -> (f64, f64) {
    let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
    let (s, c) = e.rotation.sin_cos();
    ((a * a * c * c + b * b * s * s).sqrt(), (a * a * s * s + b * b * c * c).sqrt())
}

pub fn render(z: &Embedding, labels: &LabelVector, level: f64) -> Result<Plot> {
    let mut warnings = Vec::new();
    let mut ellipses = Vec::new();
    let mut groups = Vec::new();
    for (label, &size) in labels.group_sizes().iter().enumerate() {
        if size == 0 {
            continue;
        }
        groups.push(label);
        if size < 3 {
            warnings.push(format!("group {label} has {size} point(s); at least 3 are needed, ellipse skipped"));
            continue;
        }
        let pts: Vec<[f64; 2]> =
            z.coords().iter().zip(labels.values()).filter(|(_, &y)| y == label).map(|(p, _)| *p).collect();
        let (center, cov) = group_moments(&pts);
        ellipses.push((label, confidence_ellipse(center, &cov, level)?));
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut include = |x: f64, y: f64| {
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    };
    for p in z.coords() {
        include(p[0], p[1]);
    }
    for (_, e) in &ellipses {
        let (hx, hy) = half_extent(e);
        include(e.center[0] - hx, e.center[1] - hy);
        include(e.center[0] + hx, e.center[1] + hy);
    }
    let span = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let scale = (plot_w / span[0]).min(plot_h / span[1]);
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let px = |x: f64| MARGIN + 0.5 * plot_w + (x - mid[0]) * scale;
    let py = |y: f64| MARGIN + 0.5 * plot_h - (y - mid[1]) * scale;

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999999"/>"##
    )?;
    writeln!(s, r#"<g id="points">"#)?;
    for (i, p) in z.coords().iter().enumerate() {
        let label = labels.values()[i];
        writeln!(
            s,
            r#"<circle cx="{:.4}" cy="{:.4}" r="3" fill="{}" fill-opacity="0.8" data-id="{}" data-label="{label}"/>"#,
            px(p[0]),
            py(p[1]),
            color(label),
            escape(&z.ids()[i]),
        )?;
    }
    writeln!(s, "</g>")?;
    writeln!(s, r#"<g id="ellipses">"#)?;
    for (label, e) in &ellipses {
        let (cx, cy) = (px(e.center[0]), py(e.center[1]));
        // The y axis points down in SVG, which flips the sense of rotation.
        let degrees = -e.rotation.to_degrees();
        writeln!(
            s,
            r#"<ellipse cx="{cx:.4}" cy="{cy:.4}" rx="{:.4}" ry="{:.4}" transform="rotate({degrees:.4} {cx:.4} {cy:.4})" fill="none" stroke="{}" stroke-width="1.5" data-label="{label}" data-level="{level}"/>"#,
            e.semi_axes[0] * scale,
            e.semi_axes[1] * scale,
            color(*label),
        )?;
    }
    writeln!(s, "</g>")?;
    writeln!(s, r#"<g id="legend" font-family="sans-serif" font-size="12">"#)?;
    for (row, label) in groups.iter().enumerate() {
        let y = MARGIN + 10.0 + 18.0 * row as f64;
        let x = WIDTH - MARGIN - LEGEND + 16.0;
        writeln!(s, r#"<circle cx="{x}" cy="{y}" r="4" fill="{}"/>"#, color(*label))?;
        writeln!(s, r#"<text x="{}" y="{}">group {label}</text>"#, x + 10.0, y + 4.0)?;
    }
    writeln!(s, "</g>")?;
    writeln!(s, "</svg>")?;
    Ok(Plot { svg: s, warnings })
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
