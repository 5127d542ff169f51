//! Static SVG learning curves: mean return against environment steps, one
//! line per algorithm with a min-max band across seeds. One panel per
//! (env, level) pair, stacked vertically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::MetricRow;
use crate::{BenchError, Result};

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 360.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#2a9d8f", "#e9a03b", "#6a4c93", "#5c677d", "#8ab17d", "#c06c84",
];

/// Mean, min and max return per checkpoint across seeds.
#[derive(Debug, Clone, PartialEq)]
struct Series {
    algo: String,
    points: Vec<(u64, f64, f64, f64)>,
}

type Panels = BTreeMap<(String, String), Vec<Series>>;

fn collect(rows: &[MetricRow]) -> Panels {
    let mut acc: BTreeMap<(String, String), BTreeMap<String, BTreeMap<u64, Vec<f64>>>> = BTreeMap::new();
    for r in rows {
        acc.entry((r.env.clone(), r.level.clone()))
            .or_default()
            .entry(r.algo.clone())
            .or_default()
            .entry(r.env_steps)
            .or_default()
            .push(r.mean_return);
    }
    acc.into_iter()
        .map(|(key, algos)| {
            let series = algos
                .into_iter()
                .map(|(algo, by_step)| Series {
                    algo,
                    points: by_step
                        .into_iter()
                        .map(|(s, v)| {
                            let mean = v.iter().sum::<f64>() / v.len() as f64;
                            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            (s, mean, lo, hi)
                        })
                        .collect(),
                })
                .collect();
            (key, series)
        })
        .collect()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn panel(svg: &mut String, y0: f64, env: &str, level: &str, series: &[Series]) {
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in series.iter().flat_map(|s| &s.points) {
        y_lo = y_lo.min(p.2);
        y_hi = y_hi.max(p.3);
    }
    if !(y_hi > y_lo) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = PANEL_H - TOP - BOTTOM;
    let px = |s: f64| LEFT + pw * s / x_max;
    let py = |v: f64| y0 + TOP + ph * (1.0 - (v - y_lo) / (y_hi - y_lo));

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{} {}</text>"#,
        LEFT + pw / 2.0,
        y0 + TOP - 14.0,
        esc(env),
        esc(level)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##,
        y0 + TOP
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (f * x_max, y_lo + f * (y_hi - y_lo));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            px(xv),
            y0 + PANEL_H - BOTTOM + 16.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            LEFT - 6.0,
            py(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">environment steps ({} {})</text>"#,
        LEFT + pw / 2.0,
        y0 + PANEL_H - 12.0,
        esc(env),
        esc(level)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle" font-size="12">mean return ({} {})</text>"#,
        18.0,
        y0 + TOP + ph / 2.0,
        esc(env),
        esc(level)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.iter().any(|p| p.2 < p.3) {
            let mut pts: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.3))).collect();
            pts.extend(s.points.iter().rev().map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.2))));
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.0 as f64), py(p.1))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = y0 + TOP + 12.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="16" height="4" fill="{color}"/>"#,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            lx + 22.0,
            ly + 2.0,
            esc(&s.algo)
        );
    }
}

pub fn render_svg(rows: &[MetricRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(BenchError::Run("no metrics to plot".into()));
    }
    let panels = collect(rows);
    let height = PANEL_H * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, ((env, level), series)) in panels.iter().enumerate() {
        panel(&mut svg, PANEL_H * i as f64, env, level, series);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(rows: &[MetricRow], path: &Path) -> Result<()> {
    let svg = render_svg(rows)?;
    std::fs::write(path, svg).map_err(|e| BenchError::io(path, e))
}
