//! Minimal SVG charts: step/line plots with optional bands, bars, heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Hold each value until the next x instead of interpolating.
    pub step: bool,
    /// Lower/upper y per point, drawn as a shaded area.
    pub band: Option<Vec<(f64, f64)>>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (0.1, 1.0) } else { (0.0, 1.0) };
        }
        if hi <= lo {
            (lo, hi) = if log { (lo / 2.0, hi * 2.0) } else { (lo - 0.5, hi + 0.5) };
        }
        Axis { lo, hi, log }
    }

    /// Position in [0, 1]; values at or below zero on a log axis pin to 0.
    fn unit(&self, v: f64) -> f64 {
        if self.log {
            if v <= 0.0 {
                return 0.0;
            }
            ((v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())).clamp(0.0, 1.0)
        } else {
            ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let a = self.lo.log10().floor() as i32;
            let b = self.hi.log10().ceil() as i32;
            (a..=b).map(|e| 10f64.powi(e)).filter(|&t| t >= self.lo * 0.999 && t <= self.hi * 1.001).collect()
        } else {
            (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self.series.iter().flat_map(|s| {
            s.points
                .iter()
                .map(|p| p.1)
                .chain(s.band.iter().flatten().flat_map(|b| [b.0, b.1]))
        });
        let xa = Axis::fit(xs, self.log_x);
        let ya = Axis::fit(ys, self.log_y);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let px = |x: f64| LEFT + xa.unit(x) * pw;
        let py = |y: f64| TOP + (1.0 - ya.unit(y)) * ph;

        let mut out = String::new();
        header(&mut out, &self.title);
        let _ = write!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for t in xa.ticks() {
            let x = px(t);
            let _ = write!(
                out,
                r##"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="#ccc"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"##,
                TOP,
                TOP + ph,
                TOP + ph + 16.0,
                fmt_tick(t)
            );
        }
        for t in ya.ticks() {
            let y = py(t);
            let _ = write!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ccc"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            esc(&self.x_label)
        );
        let _ = write!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let trace = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
                let mut d = String::new();
                let mut prev: Option<f64> = None;
                for (x, y) in pts {
                    match prev {
                        None => {
                            let _ = write!(d, "M{:.1},{:.1}", px(x), py(y));
                        }
                        Some(py_prev) if s.step => {
                            let _ = write!(d, " L{:.1},{:.1} L{:.1},{:.1}", px(x), py_prev, px(x), py(y));
                        }
                        Some(_) => {
                            let _ = write!(d, " L{:.1},{:.1}", px(x), py(y));
                        }
                    }
                    prev = Some(py(y));
                }
                d
            };
            if let Some(band) = &s.band {
                let upper = trace(&mut s.points.iter().zip(band).map(|(p, b)| (p.0, b.1)));
                let lower: Vec<(f64, f64)> = s.points.iter().zip(band).map(|(p, b)| (p.0, b.0)).rev().collect();
                let mut d = upper;
                for (x, y) in lower {
                    let _ = write!(d, " L{:.1},{:.1}", px(x), py(y));
                }
                let _ = write!(out, r#"<path d="{d} Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#);
            }
            let d = trace(&mut s.points.iter().copied());
            let _ = write!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>"#);
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = write!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                esc(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Horizontal bars, largest first as given.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let max = values.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let left = 190.0;
    let width = W - left - 60.0;
    let row = ((H - TOP - 20.0) / labels.len().max(1) as f64).min(28.0);
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = TOP + i as f64 * row;
        let w = (v.max(0.0) / max) * width;
        let _ = write!(
            out,
            r##"<text x="{}" y="{:.1}" text-anchor="end">{}</text><rect x="{left}" y="{:.1}" width="{w:.1}" height="{:.1}" fill="#1f77b4"/><text x="{:.1}" y="{:.1}">{}</text>"##,
            left - 6.0,
            y + row * 0.65,
            esc(label),
            y + row * 0.15,
            row * 0.7,
            left + w + 4.0,
            y + row * 0.65,
            fmt_tick(v)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Square matrix with values in [-1, 1], blue for positive, red for negative.
pub fn heatmap(title: &str, labels: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = labels.len().max(1);
    let left = 140.0;
    let cell = ((W - left - 20.0).min(H - TOP - 90.0) / n as f64).max(1.0);
    for (i, row) in values.iter().enumerate() {
        let y = TOP + i as f64 * cell;
        let _ = write!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0,
            esc(&labels[i])
        );
        for (j, &v) in row.iter().enumerate() {
            let a = v.clamp(-1.0, 1.0);
            let (r, g, b) = if a >= 0.0 {
                (255.0 * (1.0 - a), 255.0 * (1.0 - a), 255.0)
            } else {
                (255.0, 255.0 * (1.0 + a), 255.0 * (1.0 + a))
            };
            let x = left + j as f64 * cell;
            let _ = write!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="rgb({:.0},{:.0},{:.0})" stroke="white"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
                r,
                g,
                b,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                v
            );
        }
    }
    for (j, label) in labels.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let y = TOP + n as f64 * cell + 16.0;
        let _ = write!(out, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{}</text>"#, esc(label));
    }
    out.push_str("</svg>\n");
    out
}
