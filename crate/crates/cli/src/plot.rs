//! SVG rendering of sweep tables.
//!
//! Panels appear for the column families that hold data: user rates
//! (closed-form lines, simulated exact-rate markers), fairness with sum rate
//! on a second axis, and energy efficiency. A single grid point is drawn as
//! markers only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::sweep::{SweepResult, SweepRow};

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 380.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22",
];

#[derive(Debug, Clone)]
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
    markers_only: bool,
    right_axis: bool,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Option<Range> {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return None;
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            let pad = 0.5 * hi.abs().max(1.0);
            return Some(Range { lo: lo - pad, hi: hi + pad });
        }
        Some(Range { lo, hi })
    }

    fn with_zero(self) -> Range {
        Range {
            lo: self.lo.min(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Round tick step of about `n` intervals.
    fn ticks(self, n: usize) -> Vec<f64> {
        let raw = (self.hi - self.lo) / n as f64;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 2.5, 5.0, 10.0]
            .iter()
            .map(|f| f * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn label_of(row: &SweepRow, many_variants: bool, many_schemes: bool) -> String {
    let mut parts = Vec::new();
    if many_schemes {
        parts.push(row.scheme.name().to_uppercase());
    }
    if many_variants {
        parts.push(row.variant.clone());
    }
    parts.join(" ")
}

type CurveKey = (crate::scenario::Scheme, String);

fn grouped(result: &SweepResult) -> BTreeMap<(CurveKey, usize), Vec<&SweepRow>> {
    let mut order: Vec<String> = Vec::new();
    for r in &result.rows {
        if !order.contains(&r.variant) {
            order.push(r.variant.clone());
        }
    }
    let mut groups: BTreeMap<(CurveKey, usize), Vec<&SweepRow>> = BTreeMap::new();
    for r in &result.rows {
        // Zero-pad the file-order index so the map keeps it.
        let idx = order.iter().position(|v| v == &r.variant).unwrap();
        let key = ((r.scheme, format!("{idx:04}{}", r.variant)), r.user);
        groups.entry(key).or_default().push(r);
    }
    groups
}

fn series_for(
    result: &SweepResult,
    pick: impl Fn(&SweepRow) -> Option<f64>,
    per_user: bool,
    suffix: &str,
) -> Vec<Series> {
    let many_variants = result.rows.iter().any(|r| r.variant != result.rows[0].variant);
    let many_schemes = result.rows.iter().any(|r| r.scheme != result.rows[0].scheme);
    let single = grouped(result).values().all(|rows| rows.len() <= 1);
    grouped(result)
        .into_iter()
        .filter(|((_, user), _)| per_user || *user == 1)
        .filter_map(|((_, user), rows)| {
            let points: Vec<(f64, f64)> = rows.iter().filter_map(|r| pick(r).map(|y| (r.value, y))).collect();
            if points.is_empty() {
                return None;
            }
            let mut label = label_of(rows[0], many_variants, many_schemes);
            if per_user {
                if !label.is_empty() {
                    label.push(' ');
                }
                label.push_str(&format!("user {user}"));
            }
            if !suffix.is_empty() {
                if !label.is_empty() {
                    label.push(' ');
                }
                label.push_str(suffix);
            }
            Some(Series {
                label,
                points,
                dashed: false,
                markers_only: single,
                right_axis: false,
            })
        })
        .collect()
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    y2_label: Option<String>,
    series: Vec<Series>,
    /// Simulated markers drawn in the colour of the matching series.
    markers: Vec<Vec<(f64, f64)>>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn render_panel(out: &mut String, panel: &Panel, y0: f64) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
    let all_x = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let Some(xr) = Range::of(all_x) else { return };
    let left = panel.series.iter().filter(|s| !s.right_axis);
    let mut y_vals: Vec<f64> = left.flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    y_vals.extend(panel.markers.iter().flatten().map(|p| p.1));
    let Some(yr) = Range::of(y_vals.into_iter()).map(Range::with_zero) else { return };
    let y2r = Range::of(
        panel
            .series
            .iter()
            .filter(|s| s.right_axis)
            .flat_map(|s| s.points.iter().map(|p| p.1)),
    )
    .map(Range::with_zero);

    let sx = |x: f64| LEFT + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
    let sy = |y: f64, r: Range| y0 + TOP + plot_h - (y - r.lo) / (r.hi - r.lo) * plot_h;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        y0 + 24.0,
        esc(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333"/>"##,
        y0 + TOP
    );
    for t in xr.ticks(6) {
        let x = sx(t);
        let yb = y0 + TOP + plot_h;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{yb:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
            yb + 5.0,
            yb + 18.0,
            fmt_tick(t)
        );
    }
    for t in yr.ticks(5) {
        let y = sy(t, yr);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#333"/><line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT + plot_w,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    if let Some(r2) = y2r {
        let xr_edge = LEFT + plot_w;
        for t in r2.ticks(5) {
            let y = sy(t, r2);
            let _ = writeln!(
                out,
                r##"<line x1="{xr_edge:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"##,
                xr_edge + 5.0,
                xr_edge + 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        y0 + PANEL_HEIGHT - 12.0,
        esc(&panel.x_label)
    );
    let cy = y0 + TOP + plot_h / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{}</text>"#,
        esc(&panel.y_label)
    );
    if let Some(l) = &panel.y2_label {
        let x = LEFT + plot_w + 52.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{cy:.1}" font-size="12" text-anchor="middle" transform="rotate(90 {x:.1} {cy:.1})">{}</text>"#,
            esc(l)
        );
    }

    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let r = if s.right_axis { y2r.unwrap_or(yr) } else { yr };
        if s.markers_only || s.points.len() == 1 {
            for &(x, y) in &s.points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                    sx(x),
                    sy(y, r)
                );
            }
        } else {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y, r))).collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                pts.join(" ")
            );
        }
        if let Some(marks) = panel.markers.get(i) {
            for &(x, y) in marks {
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="none" stroke="{color}"/>"#,
                    sx(x) - 3.0,
                    sy(y, yr) - 3.0
                );
            }
        }
        let ly = y0 + TOP + 8.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 62.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 18.0,
            if s.dashed { r#" stroke-dasharray="4 3""# } else { "" },
            lx + 22.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
}

/// Renders the result as an SVG document.
pub fn render_svg(result: &SweepResult, title: &str) -> String {
    let x_label = result.parameter.name().to_string();
    let mut panels = Vec::new();

    let rates = series_for(result, |r| r.closed_form_rate, true, "");
    if !rates.is_empty() {
        let sims = series_for(result, |r| r.mc_exact_mean.or(r.mc_approx_mean), true, "");
        let markers = rates
            .iter()
            .map(|s| sims.iter().find(|m| m.label == s.label).map(|m| m.points.clone()).unwrap_or_default())
            .collect();
        panels.push(Panel {
            title: format!("{title}: ergodic rate"),
            x_label: x_label.clone(),
            y_label: "rate (bps/Hz)".into(),
            y2_label: None,
            series: rates,
            markers,
        });
    }

    let jfi = series_for(result, |r| r.jfi, false, "JFI");
    let mut sum = series_for(result, |r| r.sum_rate, false, "sum rate");
    if !jfi.is_empty() || !sum.is_empty() {
        let dual = !jfi.is_empty() && !sum.is_empty();
        for s in &mut sum {
            s.dashed = true;
            s.right_axis = dual;
        }
        let (y_label, y2_label) = match (jfi.is_empty(), sum.is_empty()) {
            (false, false) => ("Jain's fairness index".to_string(), Some("sum rate (bps/Hz)".to_string())),
            (false, true) => ("Jain's fairness index".to_string(), None),
            _ => ("sum rate (bps/Hz)".to_string(), None),
        };
        let mut series = jfi;
        series.extend(sum);
        panels.push(Panel {
            title: format!("{title}: fairness and sum rate"),
            x_label: x_label.clone(),
            y_label,
            y2_label,
            series,
            markers: Vec::new(),
        });
    }

    let ee = series_for(result, |r| r.ee, false, "");
    if !ee.is_empty() {
        panels.push(Panel {
            title: format!("{title}: energy efficiency"),
            x_label,
            y_label: "EE (bps/Hz/W)".into(),
            y2_label: None,
            series: ee,
            markers: Vec::new(),
        });
    }

    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(out, r#"<g class="panel">"#);
        render_panel(&mut out, p, i as f64 * PANEL_HEIGHT);
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(result: &SweepResult, title: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if result.rows.is_empty() {
        return Err(CliError::validation(["output"], "nothing to plot"));
    }
    std::fs::write(path, render_svg(result, title)).map_err(|e| CliError::io(path, e))
}
