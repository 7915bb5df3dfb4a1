//! Minimal stacked line plots.

use std::fmt::Write;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 170.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 36.0;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, series: Vec<Series>) -> Self {
        Panel {
            title: title.into(),
            series,
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

/// Panels stacked vertically over a shared x axis.
pub fn render(panels: &[Panel], x_label: &str) -> String {
    let height = panels.len() as f64 * PANEL_HEIGHT;
    let (x0, x1) = range(panels.iter().flat_map(|p| p.series.iter()).flat_map(|s| s.points.iter().map(|q| q.0)));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let plot_w = WIDTH - LEFT - RIGHT;
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT + TOP;
        let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
        let (y0, y1) = range(panel.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| top + plot_h - (y - y0) / (y1 - y0) * plot_h;
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(out, r#"<text x="{LEFT}" y="{}" font-weight="bold">{}</text>"#, top - 8.0, panel.title);
        for (y, anchor) in [(y0, top + plot_h), (y1, top + 10.0)] {
            let _ = writeln!(out, r#"<text x="{}" y="{anchor}" text-anchor="end">{}</text>"#, LEFT - 4.0, tick(y));
        }
        for x in [x0, 0.5 * (x0 + x1), x1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(x),
                top + plot_h + 14.0,
                tick(x)
            );
        }
        for (i, s) in panel.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|q| q.0.is_finite() && q.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{}"/>"#,
                pts.join(" ")
            );
            if panel.series.len() > 1 {
                let ly = top + 14.0 + 13.0 * i as f64;
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
                    LEFT + plot_w - 6.0,
                    s.label
                );
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        height - 4.0
    );
    out.push_str("</svg>\n");
    out
}
