//! Training curves as standalone SVG.
//!
//! One polyline per arm (mean over seeds at each epoch), linear axes with
//! five ticks each, axis labels and a legend. Only `svg`, `g`, `rect`,
//! `line`, `polyline`, `circle` and `text` elements are emitted, with
//! coordinates rounded to 0.01 px so output is stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::records::{Metric, Row};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Seed-averaged curve of one arm: `(epoch, mean value)` in epoch order.
pub type Curve = (String, Vec<(f64, f64)>);

/// Averages `metric` over seeds per (arm, epoch). Arms keep their order of
/// first appearance; rows without the metric are skipped.
pub fn curves(rows: &[Row], metric: Metric) -> Vec<Curve> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let Some(v) = r.get(metric) else { continue };
        let idx = match order.iter().position(|a| *a == r.arm) {
            Some(i) => i,
            None => {
                order.push(r.arm.clone());
                order.len() - 1
            }
        };
        let e = acc.entry((idx, r.epoch)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    order
        .into_iter()
        .enumerate()
        .map(|(i, arm)| {
            let pts = acc
                .range((i, 0)..(i + 1, 0))
                .map(|(&(_, epoch), &(sum, n))| (epoch as f64, sum / n as f64))
                .collect();
            (arm, pts)
        })
        .collect()
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(x: f64, span: f64) -> String {
    let digits = if span >= 100.0 {
        0
    } else if span >= 10.0 {
        1
    } else if span >= 1.0 {
        2
    } else {
        (-(span.log10().floor()) as usize + 2).min(8)
    };
    let s = format!("{x:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Renders the chart; fails if no row carries the metric.
pub fn render(rows: &[Row], metric: Metric, title: &str) -> Result<String> {
    let curves = curves(rows, metric);
    let all: Vec<(f64, f64)> = curves.iter().flat_map(|c| c.1.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::Format(format!("no records with metric {metric}")));
    }
    let (x0, x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    let (y0, y1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    let (x0, x1) = if x1 > x0 {
        (x0, x1)
    } else {
        padded_range(x0, x1)
    };
    let (y0, y1) = padded_range(y0, y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(s, r##"<g stroke="#333" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/>"#,
        TOP + ph
    );
    s.push_str("</g>\n");
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick_label(xv, x1 - x0)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv, y1 - y0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epoch</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(metric.label())
    );
    for (i, (arm, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if pts.len() == 1 {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(pts[0].0),
                sy(pts[0].1)
            );
        } else if !pts.is_empty() {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(arm)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_chart(path: &Path, rows: &[Row], metric: Metric, title: &str) -> Result<()> {
    write_atomic(path, render(rows, metric, title)?.as_bytes())
}

/// File name used by the runner for a metric's chart.
pub fn chart_file_name(metric: Metric) -> String {
    format!("chart_{}.svg", metric.as_str())
}
