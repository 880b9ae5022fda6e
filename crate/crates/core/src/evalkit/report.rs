use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::BenchmarkReport;
use crate::error::Result;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 320.0;
const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 220.0;
const TOP: f64 = 50.0;
const LEFT_A: f64 = 50.0;
const LEFT_B: f64 = 420.0;

fn axes(svg: &mut String, left: f64, title: &str, x_label: &str, y_label: &str) {
    let bottom = TOP + PANEL_H;
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{title}</text>"#,
        left + PANEL_W / 2.0,
        TOP - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<path d="M {left:.1},{TOP:.1} L {left:.1},{bottom:.1} L {:.1},{bottom:.1}" stroke="black" fill="none"/>"#,
        left + PANEL_W
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{x_label}</text>"#,
        left + PANEL_W / 2.0,
        bottom + 32.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{y_label}</text>"#,
        left - 32.0,
        TOP + PANEL_H / 2.0,
        left - 32.0,
        TOP + PANEL_H / 2.0
    );
}

fn fmt_edge(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".to_string()
    }
}

/// Renders the APE histogram and the error-vs-iteration curves. Output
/// depends only on `report`.
pub fn render_svg(report: &BenchmarkReport) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    axes(&mut svg, LEFT_A, "APE histogram", "APE bin (m)", "samples");
    let bins = &report.ape_histogram;
    let peak = bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let bar_w = if bins.is_empty() { 0.0 } else { PANEL_W / bins.len() as f64 };
    for (k, b) in bins.iter().enumerate() {
        let h = PANEL_H * b.count as f64 / peak;
        let x = LEFT_A + k as f64 * bar_w;
        let _ = writeln!(
            svg,
            r#"<rect class="bin" x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="steelblue" data-lo="{}" data-hi="{}" data-count="{}"/>"#,
            x + 1.0,
            TOP + PANEL_H - h,
            (bar_w - 2.0).max(0.0),
            fmt_edge(b.lo),
            fmt_edge(b.hi),
            b.count
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.1}" font-size="8" text-anchor="middle">{}</text>"#,
            x + bar_w / 2.0,
            TOP + PANEL_H + 12.0,
            fmt_edge(b.lo)
        );
    }

    axes(&mut svg, LEFT_B, "error vs iteration", "iteration", "APE (m)");
    let its = &report.per_iteration;
    let y_max = its
        .iter()
        .flat_map(|a| [a.ape_mean, a.ape_median])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let n = its.len().max(2) as f64 - 1.0;
    let series: [(&str, &str, fn(&super::metrics::IterationAggregate) -> f64); 2] = [
        ("ape-mean", "crimson", |a| a.ape_mean),
        ("ape-median", "darkgreen", |a| a.ape_median),
    ];
    for (id, color, value) in series {
        let mut d = String::new();
        for (k, a) in its.iter().enumerate() {
            let x = LEFT_B + PANEL_W * k as f64 / n;
            let y = TOP + PANEL_H * (1.0 - value(a) / y_max);
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M " } else { " L " });
        }
        let _ = writeln!(svg, r#"<path id="{id}" d="{d}" stroke="{color}" fill="none" stroke-width="2"/>"#);
    }
    for (k, a) in its.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.1}" font-size="9" text-anchor="middle">{}</text>"#,
            LEFT_B + PANEL_W * k as f64 / n,
            TOP + PANEL_H + 12.0,
            a.iteration
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="10">mean (red), median (green); max {y_max:.3} m</text>"#,
        LEFT_B,
        HEIGHT - 8.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `report.json` and `report.svg` into `dir`.
pub fn emit_report(report: &BenchmarkReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    let svg_path = dir.join("report.svg");
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&json_path, json)?;
    fs::write(&svg_path, render_svg(report))?;
    Ok((json_path, svg_path))
}
