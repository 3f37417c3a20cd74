//! Minimal line charts with confidence whiskers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wpcs_core::metrics::{Estimate, SweepPoint, SweepRecord};

use crate::error::CliError;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

struct Series<'a> {
    file: &'a str,
    title: &'a str,
    scale: f64,
    pick: fn(&SweepPoint) -> Estimate,
}

const SERIES: [Series<'static>; 3] = [
    Series {
        file: "harvested_power.svg",
        title: "Mean harvested power (µW)",
        scale: 1e6,
        pick: |p| p.harvested_w,
    },
    Series {
        file: "lifetime_gain.svg",
        title: "Lifetime gain",
        scale: 1.0,
        pick: |p| p.lifetime_gain,
    },
    Series {
        file: "data_share.svg",
        title: "Data share",
        scale: 1.0,
        pick: |p| p.data_share,
    },
];

/// Renders one chart. Points with a non-finite mean are skipped.
pub fn line_chart(title: &str, x_label: &str, points: &[(f64, f64, f64)]) -> String {
    let finite: Vec<_> = points.iter().filter(|p| p.1.is_finite()).copied().collect();
    let ci = |c: f64| if c.is_finite() { c } else { 0.0 };
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (0.0f64, f64::NEG_INFINITY);
    for &(x, y, c) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - ci(c));
        y1 = y1.max(y + ci(c));
    }
    if finite.is_empty() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, W / 2.0);
    let (left, right, top, bottom) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for (v, y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            tick(v)
        );
    }
    for &(x, _, _) in &finite {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            bottom + 18.0,
            tick(x)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 16.0
    );

    let line: Vec<String> = finite.iter().map(|&(x, y, _)| format!("{:.1},{:.1}", px(x), py(y))).collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        line.join(" ")
    );
    for &(x, y, c) in &finite {
        let (cx, c) = (px(x), ci(c));
        if c > 0.0 {
            let _ = writeln!(
                s,
                r#"<path d="M{cx:.1},{:.1} L{cx:.1},{:.1} M{:.1},{:.1} L{:.1},{:.1} M{:.1},{:.1} L{:.1},{:.1}" stroke="steelblue"/>"#,
                py(y - c),
                py(y + c),
                cx - 4.0,
                py(y - c),
                cx + 4.0,
                py(y - c),
                cx - 4.0,
                py(y + c),
                cx + 4.0,
                py(y + c),
            );
        }
        let _ = writeln!(s, r#"<circle cx="{cx:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, py(y));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes the harvested power, lifetime gain and data share charts into `dir`.
pub fn write_sweep_charts(dir: &Path, sweep: &SweepRecord) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    SERIES
        .iter()
        .map(|series| {
            let pts: Vec<_> = sweep
                .points
                .iter()
                .map(|p| {
                    let e = (series.pick)(p);
                    (p.value, e.mean * series.scale, e.ci95 * series.scale)
                })
                .collect();
            let path = dir.join(series.file);
            std::fs::write(&path, line_chart(series.title, &sweep.key, &pts))
                .map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
