//! CSV, JSON and SVG renderings of a degradation curve.

use std::fmt::Write as _;

use robustdeg::engine::{DegradationCurve, FigureTable, LowerBoundCurve, ReuseReport};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const CSV_HEADER: &str = "radius,trials,successes,estimate,ci_low,ci_high,fresh_samples,lower_bound";

/// Fixed-point with at least six decimals and at least six significant
/// digits, so `1` prints as `1.000000` and `0.00123` as `0.00123000`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.6}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (5 - magnitude).max(6) as usize;
    format!("{x:.decimals$}")
}

pub fn curve_csv(curve: &DegradationCurve, lower: &LowerBoundCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (p, bound) in curve.points.iter().zip(&lower.bounds) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_float(p.radius),
            p.trials,
            p.successes,
            format_float(p.estimate),
            format_float(p.ci_low),
            format_float(p.ci_high),
            p.fresh_samples,
            format_float(*bound),
        );
    }
    out
}

#[derive(Serialize)]
struct RunDocument<'a> {
    config: &'a ExperimentConfig,
    curve: &'a DegradationCurve,
    lower_bound: &'a LowerBoundCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a ReuseReport>,
}

pub fn curve_json(
    config: &ExperimentConfig,
    curve: &DegradationCurve,
    lower: &LowerBoundCurve,
    report: Option<&ReuseReport>,
) -> String {
    let doc = RunDocument {
        config,
        curve,
        lower_bound: lower,
        report,
    };
    serde_json::to_string_pretty(&doc).expect("run document serializes")
}

pub fn figures_csv(table: &FigureTable) -> String {
    let mut out = String::from("d");
    for c in &table.configs {
        out.push(',');
        out.push_str(&c.label);
    }
    out.push('\n');
    for (d, values) in &table.rows {
        out.push_str(&d.to_string());
        for v in values {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

/// Estimate versus radius with the confidence band shaded and the lower
/// bound dashed.
pub fn curve_svg(curve: &DegradationCurve, lower: &LowerBoundCurve, title: &str) -> String {
    let radii: Vec<f64> = curve.points.iter().map(|p| p.radius).collect();
    let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut r_max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if r_max <= r_min {
        r_max = r_min + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |r: f64| LEFT + (r - r_min) / (r_max - r_min) * plot_w;
    let y = |p: f64| TOP + (1.0 - p) * plot_h;
    let path = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(px, py)| format!("{:.2},{:.2}", x(px), y(py))).collect::<Vec<_>>().join(" ")
    };

    let mut band: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.radius, p.ci_high)).collect();
    band.extend(curve.points.iter().rev().map(|p| (p.radius, p.ci_low)));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##,
        path(&mut band.into_iter())
    );
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.8"/>"##,
        path(&mut curve.points.iter().map(|p| (p.radius, p.estimate)))
    );
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#d94801" stroke-width="1.5" stroke-dasharray="6,4"/>"##,
        path(&mut curve.points.iter().zip(&lower.bounds).map(|(p, b)| (p.radius, *b)))
    );

    // Axes and ticks.
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, TOP + plot_h);
    for k in 0..=5 {
        let r = r_min + (r_max - r_min) * k as f64 / 5.0;
        let p = k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(r),
            TOP + plot_h + 18.0,
            trim_tick(r)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y(p) + 4.0,
            trim_tick(p)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#dddddd"/>"##,
            y(p),
            LEFT + plot_w
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">uncertainty radius r</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 22.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">proportion P(r)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let legend_y = HEIGHT - 6.0;
    let _ = writeln!(
        svg,
        r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#08519c" stroke-width="1.8"/><text x="{3}" y="{4}">estimate</text>"##,
        LEFT,
        legend_y - 4.0,
        LEFT + 24.0,
        LEFT + 30.0,
        legend_y
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{0}" y="{1}" width="24" height="8" fill="#9ecae1" fill-opacity="0.5"/><text x="{2}" y="{3}">{4}% interval</text>"##,
        LEFT + 110.0,
        legend_y - 8.0,
        LEFT + 140.0,
        legend_y,
        trim_tick(100.0 * (1.0 - curve.delta))
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#d94801" stroke-width="1.5" stroke-dasharray="6,4"/><text x="{3}" y="{4}">lower bound{5}</text>"##,
        LEFT + 250.0,
        legend_y - 4.0,
        LEFT + 274.0,
        LEFT + 280.0,
        legend_y,
        if lower.restricted { " (sampled radii only)" } else { "" }
    );
    svg.push_str("</svg>\n");
    svg
}

fn trim_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
