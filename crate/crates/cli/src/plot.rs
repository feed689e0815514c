//! Static SVG line and step plots of CSV columns.

use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("malformed csv")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} is not numeric")]
    NotNumeric(String),
    #[error("no numeric y columns to plot")]
    NoSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a right-continuous step function.
    pub step: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub x_label: String,
    pub series: Vec<Series>,
    pub log_y: bool,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Survival-type columns are drawn as steps.
fn is_step_column(name: &str) -> bool {
    matches!(name, "survival" | "tail" | "uncoupled")
}

/// First column against every other numeric column. Empty fields are skipped;
/// text columns other than the first are ignored.
pub fn plot_from_csv(bytes: &[u8], log_y: bool) -> Result<Plot, PlotError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>()?;
    let x_label = header.first().cloned().unwrap_or_default();
    let parse = |s: &str| if s.is_empty() { Ok(None) } else { s.parse::<f64>().map(Some) };
    let mut xs = Vec::with_capacity(records.len());
    for rec in &records {
        xs.push(parse(&rec[0]).map_err(|_| PlotError::NotNumeric(x_label.clone()))?);
    }
    let mut series = Vec::new();
    for (j, name) in header.iter().enumerate().skip(1) {
        let col: Result<Vec<Option<f64>>, _> = records.iter().map(|rec| parse(&rec[j])).collect();
        let Ok(col) = col else { continue };
        let points: Vec<(f64, f64)> =
            xs.iter().zip(col).filter_map(|(x, y)| Some((x.as_ref().copied()?, y?))).collect();
        series.push(Series { name: name.clone(), points, step: is_step_column(name) });
    }
    if series.is_empty() && header.len() > 1 {
        return Err(PlotError::NoSeries);
    }
    Ok(Plot { x_label, series, log_y })
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0))
            .map(|(x, y)| (x, ty(y)))
            .collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), hi > lo) {
                (false, _) => (0.0, 1.0),
                (true, false) => (lo - 0.5, lo + 0.5),
                (true, true) => (lo, hi),
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for t in nice_ticks(x0, x1, 6) {
            let x = sx(t);
            let _ =
                writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/>"##, TOP, TOP + ph);
            let _ =
                writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, label(t));
        }
        let yticks = if self.log_y {
            (y0.floor() as i32..=y1.ceil() as i32).map(f64::from).filter(|t| *t >= y0 && *t <= y1).collect()
        } else {
            nice_ticks(y0, y1, 6)
        };
        for t in yticks {
            let y = sy(t);
            let text = if self.log_y { format!("1e{}", t as i32) } else { label(t) };
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{text}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        for (k, ser) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut d = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in &ser.points {
                if !(x.is_finite() && y.is_finite()) || (self.log_y && y <= 0.0) {
                    prev = None;
                    continue;
                }
                let (px, py) = (sx(x), sy(ty(y)));
                match prev {
                    None => {
                        let _ = write!(d, "M{px:.2},{py:.2}");
                    }
                    Some((_, qy)) if ser.step => {
                        let _ = write!(d, " L{px:.2},{qy:.2} L{px:.2},{py:.2}");
                    }
                    Some(_) => {
                        let _ = write!(d, " L{px:.2},{py:.2}");
                    }
                }
                prev = Some((px, py));
            }
            if !d.is_empty() {
                let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
