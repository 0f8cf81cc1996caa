//! Standalone SVG heatmaps. Values are clipped to a range and mapped affinely
//! onto the viridis colormap (dark purple = low end, yellow = high end).

use std::fmt::Write;

use crate::error::{config_err, LabResult};

/// Axis annotation for [`render_heatmap_svg`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// One label per column; empty means column indices.
    pub col_labels: Vec<String>,
    /// One label per row; empty means row indices.
    pub row_labels: Vec<String>,
}

const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 320.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const BAR_GAP: f64 = 20.0;
const BAR_W: f64 = 16.0;
const BAR_STEPS: usize = 64;
const MAX_TICKS: usize = 6;

fn hex(t: f64) -> String {
    let c = colorous::VIRIDIS.eval_continuous(t.clamp(0.0, 1.0));
    format!("#{:02x}{:02x}{:02x}", c.r, c.g, c.b)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_indices(n: usize) -> Vec<usize> {
    if n <= MAX_TICKS {
        return (0..n).collect();
    }
    let mut v: Vec<usize> = (0..MAX_TICKS).map(|i| i * (n - 1) / (MAX_TICKS - 1)).collect();
    v.dedup();
    v
}

/// Colour of `value` after clipping to `[lo, hi]`.
pub fn colour_of(value: f64, lo: f64, hi: f64) -> String {
    hex((value.clamp(lo, hi) - lo) / (hi - lo))
}

/// Renders `values[row][col]` with row 0 at the bottom. Errors on an empty or
/// ragged matrix, a non-finite entry, or an empty clip range.
pub fn render_heatmap_svg(values: &[Vec<f64>], axes: &Axes, clip: (f64, f64)) -> LabResult<String> {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return config_err("cannot render an empty matrix");
    }
    if values.iter().any(|r| r.len() != cols) {
        return config_err("heatmap rows differ in length");
    }
    for (i, r) in values.iter().enumerate() {
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return config_err(format!("non-finite heatmap value at row {i}, column {j}"));
        }
    }
    let (lo, hi) = clip;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return config_err(format!("clip range [{lo}, {hi}] is empty"));
    }
    let label = |labels: &[String], i: usize| labels.get(i).cloned().unwrap_or_else(|| i.to_string());

    let (cw, ch) = (PLOT_W / cols as f64, PLOT_H / rows as f64);
    let width = LEFT + PLOT_W + BAR_GAP + BAR_W + 60.0;
    let height = TOP + PLOT_H + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    if !axes.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            escape(&axes.title)
        );
    }
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (i, row) in values.iter().enumerate() {
        let y = TOP + PLOT_H - (i + 1) as f64 * ch;
        for (j, &v) in row.iter().enumerate() {
            let x = LEFT + j as f64 * cw;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"/>"#,
                colour_of(v, lo, hi)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );
    for j in tick_indices(cols) {
        let x = LEFT + (j as f64 + 0.5) * cw;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + PLOT_H + 15.0,
            escape(&label(&axes.col_labels, j))
        );
    }
    for i in tick_indices(rows) {
        let y = TOP + PLOT_H - (i as f64 + 0.5) * ch;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            y + 4.0,
            escape(&label(&axes.row_labels, i))
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 35.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
        escape(&axes.y_label)
    );
    let bx = LEFT + PLOT_W + BAR_GAP;
    let step_h = PLOT_H / BAR_STEPS as f64;
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for k in 0..BAR_STEPS {
        let t = (k as f64 + 0.5) / BAR_STEPS as f64;
        let y = TOP + PLOT_H - (k + 1) as f64 * step_h;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.2}" y="{y:.2}" width="{BAR_W}" height="{step_h:.2}" fill="{}"/>"#,
            hex(t)
        );
    }
    let _ = writeln!(s, "</g>");
    for (frac, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{v:.3}</text>"#,
            bx + BAR_W + 4.0,
            TOP + PLOT_H - frac * PLOT_H + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
