//! Static SVG scatter plots and heatmaps of record tables.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::InstanceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    /// One cell per distinct `(x, y)` pair; meant for regular grids.
    Heatmap,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scatter" => Ok(Self::Scatter),
            "heatmap" => Ok(Self::Heatmap),
            other => Err(Error::Plot(format!("unknown plot kind `{other}` (scatter | heatmap)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub x: String,
    pub y: String,
    pub color: String,
    /// Colour scale bounds; the data range is used when unset.
    pub cmin: Option<f64>,
    pub cmax: Option<f64>,
}

const COLUMNS: [&str; 13] = [
    "index",
    "n",
    "T",
    "min_gap",
    "s_star",
    "P",
    "delta_E",
    "delta",
    "abs_J_top",
    "ground_dim",
    "norm_drift",
    "M",
    "criterion_bound",
];

impl PlotSpec {
    pub fn scatter(x: &str, y: &str, color: &str) -> Self {
        Self { kind: PlotKind::Scatter, x: x.into(), y: y.into(), color: color.into(), cmin: None, cmax: None }
    }

    pub fn heatmap(color: &str) -> Self {
        Self { kind: PlotKind::Heatmap, x: "J1".into(), y: "J2".into(), color: color.into(), cmin: None, cmax: None }
    }

    /// Checks every field names a record column for `n`-qubit records.
    pub fn check_fields(&self, n: usize) -> Result<()> {
        for name in [&self.x, &self.y, &self.color] {
            let ok = COLUMNS.contains(&name.as_str())
                || name.strip_prefix('J').and_then(|d| d.parse::<usize>().ok()).is_some_and(|x| x < 1 << n);
            if !ok {
                return Err(Error::Plot(format!("unknown field `{name}`")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.cmin, self.cmax) {
            if !(lo < hi) {
                return Err(Error::Plot(format!("colour bounds [{lo}, {hi}] are empty")));
            }
        }
        Ok(())
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

// viridis anchors, interpolated linearly
const RAMP: [(u8, u8, u8); 5] = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)];

fn colormap(t: f64) -> String {
    if !t.is_finite() {
        return "#999999".into();
    }
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        None
    } else if lo == hi {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot as a standalone SVG document.
pub fn render_svg(records: &[InstanceRecord], spec: &PlotSpec) -> Result<String> {
    let first = records.first().ok_or_else(|| Error::Plot("no records to plot".into()))?;
    spec.check_fields(first.n())?;
    let get = |r: &InstanceRecord, name: &str| r.field(name).unwrap_or(f64::NAN);
    let pts: Vec<(f64, f64, f64)> = records
        .iter()
        .map(|r| (get(r, &spec.x), get(r, &spec.y), get(r, &spec.color)))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(Error::Plot("no finite points to plot".into()));
    }
    let (x0, x1) = range(pts.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (y0, y1) = range(pts.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let (d0, d1) = range(pts.iter().map(|p| p.2)).unwrap_or((0.0, 1.0));
    let (c0, c1) = (spec.cmin.unwrap_or(d0), spec.cmax.unwrap_or(d1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
    let shade = |c: f64| colormap((c - c0) / (c1 - c0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    match spec.kind {
        PlotKind::Scatter => {
            for &(x, y, c) in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{}"/>"#, sx(x), sy(y), shade(c));
            }
        }
        PlotKind::Heatmap => {
            let distinct = |mut v: Vec<f64>| {
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            };
            let xs = distinct(pts.iter().map(|p| p.0).collect());
            let ys = distinct(pts.iter().map(|p| p.1).collect());
            let cw = pw / xs.len() as f64;
            let ch = ph / ys.len() as f64;
            for &(x, y, c) in &pts {
                let i = xs.partition_point(|v| *v < x);
                let j = ys.partition_point(|v| *v < y);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + i as f64 * cw,
                    TOP + ph - (j + 1) as f64 * ch,
                    cw + 0.05,
                    ch + 0.05,
                    shade(c)
                );
            }
        }
    }

    // axes
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (LEFT + f * pw, TOP + ph - f * ph);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, num(xv));
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, num(yv));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y)
    );

    // colour bar
    let bx = WIDTH - RIGHT + 30.0;
    let steps = 64;
    let bh = ph / steps as f64;
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            TOP + ph - (k + 1) as f64 * bh,
            bh + 0.05,
            colormap(t)
        );
    }
    let _ = writeln!(s, r#"<rect x="{bx}" y="{TOP}" width="20" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, bx + 25.0, TOP + 10.0, num(c1));
    let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, bx + 25.0, TOP + ph, num(c0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="14">{}</text>"#, bx, TOP - 10.0, escape(&spec.color));
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(records: &[InstanceRecord], spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(records, spec)?;
    std::fs::write(path, svg)?;
    Ok(())
}
