//! Minimal SVG 1.1 rendering of data tables. Output depends only on the input
//! table, so identical data gives byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::bifurcation::{Bracket, LabelScheme, RegionGrid};
use crate::error::{Error, Result};
use crate::io::{grid_from_table, write_atomic, Schema, Table};

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

// Fifteen colours, one per nonzero four-bit outcome mask.
const PALETTE: [&str; 15] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    mag * if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut v = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * step {
        v.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    v
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, log_x: bool) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let x = if log_x { x.log10() } else { x };
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        Self { x0, x1, y0, y1, log_x }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.log10() } else { x };
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(s: &mut String, title: &str) {
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<title>{}</title>
<rect width="{W}" height="{H}" fill="white"/>"#,
        escape(title)
    )
    .unwrap();
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t).unwrap();
    let xt: Vec<f64> = if f.log_x {
        ticks(f.x0.floor(), f.x1.ceil()).into_iter().filter(|e| e.fract() == 0.0).map(|e| 10f64.powf(e)).collect()
    } else {
        ticks(f.x0, f.x1)
    };
    for v in xt {
        let x = f.px(v);
        if !(l - 0.01..=r + 0.01).contains(&x) {
            continue;
        }
        writeln!(s, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 18.0, fmt_tick(v)).unwrap();
    }
    for v in ticks(f.y0, f.y1) {
        let y = f.py(v);
        writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 5.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, fmt_tick(v)).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 10.0, escape(xlabel))
        .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    )
    .unwrap();
}

fn legend(s: &mut String, entries: &[(String, String)]) {
    for (k, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = W - RIGHT + 12.0;
        writeln!(s, r#"<rect x="{x}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, y - 10.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 18.0, escape(name)).unwrap();
    }
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let mut d = String::new();
    for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        write!(d, "{:.2},{:.2} ", f.px(x), f.py(y)).unwrap();
    }
    writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end()).unwrap();
}

/// Line plot with optional dashed vertical markers.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], markers: &[f64]) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Format("no data to plot".into()));
    }
    let pts = || series.iter().flat_map(|s| s.points.iter().copied());
    let y_any = pts().map(|p| p.1).find(|y| y.is_finite()).unwrap_or(0.0);
    let f = Frame::fit(pts().chain(markers.iter().map(|&m| (m, y_any))), false);
    let mut s = String::new();
    header(&mut s, title);
    axes(&mut s, &f, xlabel, ylabel);
    let mut entries = Vec::new();
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        polyline(&mut s, &f, &ser.points, color);
        entries.push((ser.name.clone(), color.to_string()));
    }
    for &m in markers {
        let x = f.px(m);
        if (LEFT..=W - RIGHT).contains(&x) {
            writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
                H - BOTTOM
            )
            .unwrap();
        }
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Ok(s)
}

fn label_name(scheme: LabelScheme, code: u16) -> String {
    match scheme {
        LabelScheme::ConstRegions if code == 0 => "undetermined".into(),
        LabelScheme::ConstRegions => format!("region {code}"),
        LabelScheme::OutcomeMask => {
            let names: Vec<&str> = crate::odeint::Outcome::from_mask(code).iter().map(|o| o.name()).collect();
            if names.is_empty() {
                "undetermined".into()
            } else {
                names.join(" + ")
            }
        }
    }
}

/// Discrete raster of a region grid; cells holding more than one outcome
/// are hatched.
pub fn raster_plot(title: &str, g: &RegionGrid) -> Result<String> {
    if g.labels.is_empty() {
        return Err(Error::Format("no data to plot".into()));
    }
    let codes: Vec<u16> = g.counts().into_keys().collect();
    let color = |c: u16| if c == 0 { "#ffffff" } else { PALETTE[(c as usize - 1) % PALETTE.len()] };
    let (nx, ny) = (g.x_axis.n, g.y_axis.n);
    let cw = (W - LEFT - RIGHT) / nx as f64;
    let ch = (H - TOP - BOTTOM) / ny as f64;
    let log_x = g.x_axis.scale == crate::bifurcation::AxisScale::Log;
    let log_y = g.y_axis.scale == crate::bifurcation::AxisScale::Log;
    let tr = |v: f64, log: bool| if log { v.log10() } else { v };
    let f = Frame {
        x0: tr(g.x_axis.min, log_x),
        x1: tr(g.x_axis.max, log_x),
        y0: tr(g.y_axis.min, log_y),
        y1: tr(g.y_axis.max, log_y),
        log_x,
    };
    let mut s = String::new();
    header(&mut s, title);
    s.push_str(
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><path d="M0,6 L6,0" stroke="black" stroke-width="0.8"/></pattern></defs>
"##,
    );
    for j in 0..ny {
        let y = H - BOTTOM - (j + 1) as f64 * ch;
        // Merge horizontal runs of equal labels to keep files small.
        let mut i = 0;
        while i < nx {
            let c = g.label(i, j);
            let mut k = i + 1;
            while k < nx && g.label(k, j) == c {
                k += 1;
            }
            let x = LEFT + i as f64 * cw;
            let w = (k - i) as f64 * cw;
            writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{ch:.3}" fill="{}"/>"#, color(c))
                .unwrap();
            if g.is_multistable(c) {
                writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{ch:.3}" fill="url(#hatch)"/>"#)
                    .unwrap();
            }
            i = k;
        }
    }
    let ylabel = if log_y { format!("log10 {}", g.y_axis.param.name()) } else { g.y_axis.param.name().into() };
    axes(&mut s, &f, g.x_axis.param.name(), &ylabel);
    let entries: Vec<(String, String)> =
        codes.iter().map(|&c| (label_name(g.scheme, c), color(c).to_string())).collect();
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Ok(s)
}

fn column(t: &Table, name: &str) -> Result<Vec<f64>> {
    t.column(name).ok_or_else(|| Error::Format(format!("{} table lacks column '{name}'", t.schema.name())))
}

/// Render any table produced by the command-line tool.
pub fn plot_table(t: &Table) -> Result<String> {
    if t.rows.is_empty() {
        return Err(Error::Format("no data to plot".into()));
    }
    let xy = |xs: &[f64], ys: &[f64]| xs.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
    match t.schema {
        Schema::Timeseries => {
            let ts = column(t, "t")?;
            let series: Vec<Series> = t.columns[1..]
                .iter()
                .map(|c| Ok(Series { name: c.clone(), points: xy(&ts, &column(t, c)?) }))
                .collect::<Result<_>>()?;
            line_plot("time series", "t", "state", &series, &[])
        }
        Schema::Hopf => {
            let p = t.columns.first().cloned().unwrap_or_default();
            let series = [Series { name: "tau*".into(), points: xy(&column(t, &p)?, &column(t, "tau_star")?) }];
            let asym: Vec<Bracket> = t.meta_as("asymptotes").unwrap_or_default();
            let marks: Vec<f64> = asym.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
            line_plot("Hopf threshold", &p, "tau*", &series, &marks)
        }
        Schema::Areas => {
            let a = column(t, "a")?;
            let series: Vec<Series> = t.columns[1..]
                .iter()
                .map(|c| Ok(Series { name: c.clone(), points: xy(&a, &column(t, c)?) }))
                .collect::<Result<_>>()?;
            line_plot("region areas", "a", "area fraction", &series, &[])
        }
        Schema::Abm => {
            let series = [Series { name: "x_hat".into(), points: xy(&column(t, "generation")?, &column(t, "x_hat")?) }];
            line_plot("finite population", "generation", "x", &series, &[])
        }
        Schema::Regions => raster_plot("regions", &grid_from_table(t)?),
    }
}

/// Render `data` to `out`. Nothing is written when rendering fails.
pub fn plot_file(data: &Path, out: &Path) -> Result<()> {
    let svg = plot_table(&Table::read(data)?)?;
    write_atomic(out, svg.as_bytes())
}
