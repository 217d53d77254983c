//! Minimal standalone SVG bar charts.
//!
//! Geometry depends only on the series, so identical input gives
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 120.0;
/// Fraction of each slot taken by the bar.
const BAR_FILL: f64 = 0.7;
const TICKS: usize = 5;
const BAR_COLOR: &str = "#4c72b0";

pub const PLOT_HEIGHT: f64 = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
const PLOT_WIDTH: f64 = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("chart series is empty")]
    EmptySeries,
    #[error("value for `{0}` is not a finite non-negative number")]
    BadValue(String),
    #[error("writing chart: {0}")]
    Io(#[from] std::io::Error),
}

/// Geometry of one rendered bar, in SVG user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarRect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

/// Bar rectangles for `values`; heights are `value / max * PLOT_HEIGHT`.
pub fn bar_layout(values: &[f64]) -> Vec<BarRect> {
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    let slot = PLOT_WIDTH / values.len().max(1) as f64;
    let baseline = MARGIN_TOP + PLOT_HEIGHT;
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let height = if max > 0.0 { v / max * PLOT_HEIGHT } else { 0.0 };
            BarRect {
                x: MARGIN_LEFT + slot * k as f64 + slot * (1.0 - BAR_FILL) / 2.0,
                y: baseline - height,
                width: slot * BAR_FILL,
                height,
            }
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render a labelled bar chart in series order.
pub fn render_bar_chart(title: &str, y_label: &str, series: &[(String, f64)]) -> Result<String, ChartError> {
    if series.is_empty() {
        return Err(ChartError::EmptySeries);
    }
    if let Some((label, _)) = series.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
        return Err(ChartError::BadValue(label.clone()));
    }
    let values: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    let bars = bar_layout(&values);
    let baseline = MARGIN_TOP + PLOT_HEIGHT;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        escape(y_label)
    );

    // axes and ticks
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{baseline}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{baseline}" x2="{:.2}" y2="{baseline}" stroke="black"/>"#,
        MARGIN_LEFT + PLOT_WIDTH
    );
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let y = baseline - frac * PLOT_HEIGHT;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            tick_label(max * frac)
        );
    }

    for ((label, value), bar) in series.iter().zip(&bars) {
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{BAR_COLOR}"><title>{}: {}</title></rect>"#,
            bar.x,
            bar.y,
            bar.width,
            bar.height,
            escape(label),
            tick_label(*value)
        );
        let cx = bar.x + bar.width / 2.0;
        let ly = baseline + 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-45 {cx:.2} {ly:.2})">{}</text>"#,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_label(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

pub fn emit_bar_chart(
    title: &str,
    y_label: &str,
    series: &[(String, f64)],
    output_path: &Path,
) -> Result<(), ChartError> {
    let svg = render_bar_chart(title, y_label, series)?;
    std::fs::write(output_path, svg)?;
    Ok(())
}
