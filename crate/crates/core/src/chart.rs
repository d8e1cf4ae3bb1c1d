//! Self-contained SVG rendering of IDT-versus-degree curves: analytic lines,
//! empirical means with a ±2·SEM band, one panel per temperature, laid out
//! on a grid of up to three columns.
//!
//! The output is deterministic: fixed float formatting, no timestamps, no
//! external resources.

use crate::error::{Error, Result};

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 42.0;
const ANALYTIC_COLOR: &str = "#1f77b4";
const EMPIRICAL_COLOR: &str = "#d62728";
const BAND_COLOR: &str = "#bbbbbb";

/// One panel's data.
#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    /// (k, D) points of the analytic curve.
    pub analytic: Option<Vec<(f64, f64)>>,
    /// (k, mean, sem) points of the empirical curve.
    pub empirical: Option<Vec<(f64, f64, f64)>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

struct Frame {
    x0: f64,
    y0: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = PANEL_W - MARGIN_L - MARGIN_R;
        self.x0 + MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = PANEL_H - MARGIN_T - MARGIN_B;
        self.y0 + PANEL_H - MARGIN_B - (y - self.y_min) / (self.y_max - self.y_min) * h
    }
}

fn panel_bounds(panel: &Panel) -> Result<(f64, f64, f64, f64)> {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    if let Some(a) = &panel.analytic {
        for &(k, d) in a {
            xs.push(k);
            ys.push(d);
        }
    }
    if let Some(e) = &panel.empirical {
        for &(k, m, s) in e {
            xs.push(k);
            ys.push(m + 2.0 * s);
            ys.push(m - 2.0 * s);
        }
    }
    if xs.is_empty() {
        return Err(Error::InvalidInput("panel has no data".into()));
    }
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = ys.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let y_hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_hi - y_lo).max(1e-9);
    let x_pad = 0.02 * (x_max - x_min).max(1e-9);
    Ok((x_min - x_pad, x_max + x_pad, y_lo, y_hi + pad))
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str, width: f64) -> String {
    let coords: Vec<String> = points.map(|(x, y)| format!("{},{}", fmt(x), fmt(y))).collect();
    format!(
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        coords.join(" ")
    )
}

fn render_panel(svg: &mut String, panel: &Panel, x0: f64, y0: f64) -> Result<()> {
    let (x_min, x_max, y_min, y_max) = panel_bounds(panel)?;
    let f = Frame {
        x0,
        y0,
        x_min,
        x_max,
        y_min,
        y_max,
    };
    let left = f.px(x_min);
    let right = f.px(x_max);
    let bottom = f.py(y_min);
    let top = f.py(y_max);

    // Axes.
    svg.push_str(&format!(
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        fmt(left),
        fmt(bottom),
        fmt(right),
        fmt(bottom)
    ));
    svg.push_str(&format!(
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        fmt(left),
        fmt(bottom),
        fmt(left),
        fmt(top)
    ));
    // Ticks and labels.
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        let xp = f.px(xv);
        let yp = f.py(yv);
        svg.push_str(&format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            fmt(xp),
            fmt(bottom),
            fmt(xp),
            fmt(bottom + 4.0)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
            fmt(xp),
            fmt(bottom + 15.0),
            fmt(xv)
        ));
        svg.push_str(&format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            fmt(left - 4.0),
            fmt(yp),
            fmt(left),
            fmt(yp)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
            fmt(left - 6.0),
            fmt(yp + 3.0),
            fmt(yv)
        ));
    }
    // Axis names and title.
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">k</text>"#,
        fmt((left + right) / 2.0),
        fmt(y0 + PANEL_H - 8.0)
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 {} {})">D (steps)</text>"#,
        fmt(x0 + 14.0),
        fmt((top + bottom) / 2.0),
        fmt(x0 + 14.0),
        fmt((top + bottom) / 2.0)
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" font-weight="bold">{}</text>"#,
        fmt((left + right) / 2.0),
        fmt(y0 + 18.0),
        panel.title
    ));

    // ±2·SEM band, drawn first so the curves sit on top.
    if let Some(emp) = &panel.empirical {
        if emp.len() >= 2 {
            let upper = emp.iter().map(|&(k, m, s)| (f.px(k), f.py(m + 2.0 * s)));
            let lower = emp
                .iter()
                .rev()
                .map(|&(k, m, s)| (f.px(k), f.py(m - 2.0 * s)));
            let coords: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{},{}", fmt(x), fmt(y)))
                .collect();
            svg.push_str(&format!(
                r#"<polygon points="{}" fill="{BAND_COLOR}" fill-opacity="0.55" stroke="none"/>"#,
                coords.join(" ")
            ));
        }
    }
    if let Some(a) = &panel.analytic {
        svg.push_str(&polyline(
            a.iter().map(|&(k, d)| (f.px(k), f.py(d))),
            ANALYTIC_COLOR,
            1.6,
        ));
    }
    if let Some(emp) = &panel.empirical {
        svg.push_str(&polyline(
            emp.iter().map(|&(k, m, _)| (f.px(k), f.py(m))),
            EMPIRICAL_COLOR,
            1.4,
        ));
        for &(k, m, _) in emp {
            svg.push_str(&format!(
                r#"<circle cx="{}" cy="{}" r="1.8" fill="{EMPIRICAL_COLOR}"/>"#,
                fmt(f.px(k)),
                fmt(f.py(m))
            ));
        }
    }

    // Legend, top right of the panel.
    let lx = right - 118.0;
    let mut ly = top + 8.0;
    if panel.analytic.is_some() {
        svg.push_str(&format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{ANALYTIC_COLOR}" stroke-width="1.6"/>"#,
            fmt(lx),
            fmt(ly),
            fmt(lx + 18.0),
            fmt(ly)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-size="10">analytic</text>"#,
            fmt(lx + 23.0),
            fmt(ly + 3.0)
        ));
        ly += 13.0;
    }
    if panel.empirical.is_some() {
        svg.push_str(&format!(
            r#"<rect x="{}" y="{}" width="18" height="6" fill="{BAND_COLOR}" fill-opacity="0.55"/>"#,
            fmt(lx),
            fmt(ly - 3.0)
        ));
        svg.push_str(&format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{EMPIRICAL_COLOR}" stroke-width="1.4"/>"#,
            fmt(lx),
            fmt(ly),
            fmt(lx + 18.0),
            fmt(ly)
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-size="10">empirical ±2·SEM</text>"#,
            fmt(lx + 23.0),
            fmt(ly + 3.0)
        ));
    }
    Ok(())
}

/// Render panels on a grid of up to three columns.
pub fn render(panels: &[Panel]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::InvalidInput("no panels to draw".into()));
    }
    let cols = panels.len().min(3);
    let rows = panels.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let x0 = (i % cols) as f64 * PANEL_W;
        let y0 = (i / cols) as f64 * PANEL_H;
        render_panel(&mut svg, panel, x0, y0)?;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
