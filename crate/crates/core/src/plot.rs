//! Standalone SVG rendering of rate series and smoothed curves.
//!
//! No plotting dependency: the documents are assembled by hand with fixed
//! two-decimal coordinates, so identical inputs always produce identical
//! bytes. Raw rates are dots (hollow when below the support threshold), the
//! smooth is a polyline and its confidence band a translucent polygon.

use std::fmt::Write;

use crate::curves::{RateKind, RateSeries};
use crate::smoothing::SmoothedCurve;

/// Visual parameters of a plot.
#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub point_color: String,
    pub line_color: String,
    pub band_color: String,
}

impl PlotStyle {
    /// House style for a series kind: blue activation dots, red hazard dots,
    /// blue smooth with a grey band.
    pub fn for_kind(kind: RateKind) -> Self {
        let (title, point_color) = match kind {
            RateKind::Activation => ("Activation rate by test case age", "#1f77b4"),
            RateKind::Hazard => ("Failure rate by test case age", "#d62728"),
        };
        PlotStyle {
            width: 900.0,
            height: 520.0,
            title: title.to_string(),
            x_label: "age (days)".to_string(),
            y_label: "rate".to_string(),
            point_color: point_color.to_string(),
            line_color: "#1f77b4".to_string(),
            band_color: "#bbbbbb".to_string(),
        }
    }
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Renders a standalone SVG document. The series must be non-empty; the
/// smooth is optional (a curve needs at least two points to draw a line).
pub fn emit_svg(series: &RateSeries, smooth: Option<&SmoothedCurve>, style: &PlotStyle) -> String {
    assert!(!series.points.is_empty(), "cannot plot an empty series");

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = 0.0f64;
    for p in &series.points {
        x_min = x_min.min(p.age_days as f64);
        x_max = x_max.max(p.age_days as f64);
        y_max = y_max.max(p.rate);
    }
    if let Some(curve) = smooth {
        for p in &curve.points {
            x_min = x_min.min(p.age_days);
            x_max = x_max.max(p.age_days);
            y_max = y_max.max(p.ci_high);
        }
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;

    let plot_w = style.width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = style.height - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + plot_h - (y.max(0.0) / y_max) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = style.width,
        h = style.height
    );
    let _ = write!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        xml_escape(&style.title)
    );

    // Axes.
    let x_axis_y = MARGIN_TOP + plot_h;
    let _ = write!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT, x_axis_y, MARGIN_LEFT + plot_w, x_axis_y
    );
    let _ = write!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT, MARGIN_TOP, MARGIN_LEFT, x_axis_y
    );
    for tick in nice_ticks(x_min, x_max) {
        let x = sx(tick);
        let _ = write!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{y2:.2}" stroke="black" stroke-width="1"/>"#,
            y = x_axis_y,
            y2 = x_axis_y + 5.0
        );
        let _ = write!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
            y = x_axis_y + 18.0,
            label = format_tick(tick)
        );
    }
    for tick in nice_ticks(0.0, y_max) {
        let y = sy(tick);
        let _ = write!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x2:.2}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            x = MARGIN_LEFT - 5.0,
            x2 = MARGIN_LEFT
        );
        let _ = write!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            x = MARGIN_LEFT - 8.0,
            y = y + 4.0,
            label = format_tick(tick)
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        style.height - 12.0,
        xml_escape(&style.x_label)
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&style.y_label)
    );

    // Confidence band: upper edge left to right, lower edge back.
    if let Some(curve) = smooth {
        if curve.points.len() >= 2 {
            let mut points = String::new();
            for p in &curve.points {
                let _ = write!(points, "{:.2},{:.2} ", sx(p.age_days), sy(p.ci_high));
            }
            for p in curve.points.iter().rev() {
                let _ = write!(points, "{:.2},{:.2} ", sx(p.age_days), sy(p.ci_low));
            }
            let _ = write!(
                svg,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.35" stroke="none"/>"#,
                points.trim_end(),
                style.band_color
            );
            let mut line = String::new();
            for p in &curve.points {
                let _ = write!(line, "{:.2},{:.2} ", sx(p.age_days), sy(p.fitted));
            }
            let _ = write!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                line.trim_end(),
                style.line_color
            );
        }
    }

    // Raw rates; hollow dots mark low support.
    for p in &series.points {
        let cx = sx(p.age_days as f64);
        let cy = sy(p.rate);
        if p.low_support {
            let _ = write!(
                svg,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="none" stroke="{}" stroke-width="1"/>"#,
                style.point_color
            );
        } else {
            let _ = write!(
                svg,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}"/>"#,
                style.point_color
            );
        }
    }

    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn format_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Around five round tick positions covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    debug_assert!(hi > lo);
    let raw_step = (hi - lo) / 5.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let residual = raw_step / magnitude;
    let step = magnitude
        * if residual <= 1.0 {
            1.0
        } else if residual <= 2.0 {
            2.0
        } else if residual <= 5.0 {
            5.0
        } else {
            10.0
        };
    let mut ticks = Vec::new();
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi + step * 1e-9 {
        // Snap near-zero artifacts of the stepping.
        ticks.push(if tick.abs() < step * 1e-9 { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::RatePoint;
    use crate::smoothing::SmoothedPoint;

    fn point(age: i64, rate: f64, low_support: bool) -> RatePoint {
        RatePoint {
            age_days: age,
            numerator: (rate * 100.0) as usize,
            denominator: 100,
            rate,
            low_support,
        }
    }

    fn series(points: Vec<RatePoint>) -> RateSeries {
        RateSeries {
            kind: RateKind::Hazard,
            points,
            min_support: 10,
        }
    }

    #[test]
    fn single_point_renders_one_dot_and_no_line() {
        let svg = emit_svg(
            &series(vec![point(3, 0.5, false)]),
            None,
            &PlotStyle::for_kind(RateKind::Hazard),
        );
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let s = series(vec![point(0, 0.1, false), point(1, 0.3, true)]);
        let style = PlotStyle::for_kind(RateKind::Activation);
        assert_eq!(emit_svg(&s, None, &style), emit_svg(&s, None, &style));
    }

    #[test]
    fn band_polygon_has_two_vertices_per_smoothed_point() {
        let s = series((0..10).map(|i| point(i, 0.2, false)).collect());
        let curve = SmoothedCurve {
            points: (0..10)
                .map(|i| SmoothedPoint {
                    age_days: i as f64,
                    fitted: 0.2,
                    ci_low: 0.15,
                    ci_high: 0.25,
                })
                .collect(),
        };
        let svg = emit_svg(&s, Some(&curve), &PlotStyle::for_kind(RateKind::Hazard));
        let start = svg.find("<polygon points=\"").unwrap() + "<polygon points=\"".len();
        let end = start + svg[start..].find('"').unwrap();
        let vertex_count = svg[start..end].split_whitespace().count();
        assert_eq!(vertex_count, 2 * curve.points.len());
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn low_support_points_are_hollow() {
        let svg = emit_svg(
            &series(vec![point(0, 0.4, true), point(1, 0.6, false)]),
            None,
            &PlotStyle::for_kind(RateKind::Hazard),
        );
        assert!(svg.contains(r##"fill="none" stroke="#d62728""##));
        assert!(svg.contains(r##"fill="#d62728""##));
    }
}
