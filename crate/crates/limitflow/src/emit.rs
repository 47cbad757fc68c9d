//! Output files. Each is written to a temporary file in the target directory
//! and renamed into place, so readers never observe a partial file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::report::{DecaySeries, Report, RootRow};

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError { path: path.to_path_buf(), source }
}

/// Shortest decimal that round-trips; non-finite values become `nan`/`inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, IoError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(&path))?;
    tmp.as_file().sync_all().map_err(io_err(&path))?;
    tmp.persist(&path).map_err(|e| IoError { path: path.clone(), source: e.error })?;
    Ok(path)
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn trajectories_csv(report: &Report) -> Option<Vec<u8>> {
    let table = report.trajectory.as_ref()?;
    let rows = table.x.iter().enumerate().map(|(k, x)| {
        let star = table.x_star.as_ref().and_then(|s| s.get(k));
        vec![
            k.to_string(),
            num(k as f64 * table.period),
            num(x.re),
            num(x.im),
            star.map_or(String::new(), |s| num(s.re)),
            star.map_or(String::new(), |s| num(s.im)),
            star.map_or(String::new(), |s| num((x - s).norm())),
        ]
    });
    Some(csv_bytes(&["k", "t", "x_re", "x_im", "x_star_re", "x_star_im", "abs_error"], rows))
}

pub fn spectrum_csv(report: &Report) -> Option<Vec<u8>> {
    let s = report.spectrum.as_ref()?;
    let rows = s.roots.iter().map(|r| vec![num(r.re), num(r.im), num(r.modulus), r.multiplicity.to_string()]);
    Some(csv_bytes(&["re", "im", "modulus", "multiplicity"], rows))
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{b}" x2="{l}" y2="{t}"/></g>"#);
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let xv = f.x0 + frac * (f.x1 - f.x0);
        let yv = f.y0 + frac * (f.y1 - f.y0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.px(xv), b + 16.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, f.py(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, escape(xlabel));
    let _ = writeln!(s, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel));
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    num(if r == 0.0 { 0.0 } else { r })
}

fn legend(s: &mut String, entries: &[(&str, &str, bool)]) {
    for (i, (label, color, dashed)) in entries.iter().enumerate() {
        let y = PAD + 14.0 + 18.0 * i as f64;
        let x = W - PAD - 150.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(s, r#"<g class="legend"><line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text></g>"#, x + 24.0, x + 30.0, y + 4.0, escape(label));
    }
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], name: &str, color: &str, dashed: bool) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(s, r#"<polyline class="series" data-name="{name}" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, coords.join(" "));
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// `log₁₀|x_k − x*_k|` against the `(μ−ε)^k` reference through the first point.
pub fn decay_svg(series: &DecaySeries) -> String {
    let measured: Vec<(f64, f64)> = series.measured.iter().filter(|(_, e)| *e > 0.0 && e.is_finite()).map(|&(k, e)| (k as f64, e.log10())).collect();
    let (k_first, anchor) = measured.first().copied().unwrap_or((0.0, 0.0));
    let slope = series.reference_base.log10();
    let reference: Vec<(f64, f64)> = series.measured.iter().map(|&(k, _)| (k as f64, anchor + slope * (k as f64 - k_first))).collect();
    let all = measured.iter().chain(&reference);
    let (x0, x1) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = if x0.is_finite() { (x0, x1.max(x0 + 1.0)) } else { (0.0, 1.0) };
    let (y0, y1) = if y0.is_finite() { padded(y0, y1) } else { (-1.0, 1.0) };
    let f = Frame { x0, x1, y0, y1 };
    let mut s = svg_open("expansion error decay");
    axes(&mut s, &f, "k", "log10 |x_k - x*_k|");
    polyline(&mut s, &f, &measured, "measured", "#1f77b4", false);
    polyline(&mut s, &f, &reference, "reference", "#d62728", true);
    legend(&mut s, &[("measured", "#1f77b4", false), ("(mu - eps)^k", "#d62728", true)]);
    s.push_str("</svg>\n");
    s
}

/// Characteristic roots with the dominant circle `|z| = μ`.
pub fn roots_svg(roots: &[RootRow], mu: f64) -> String {
    let reach = roots.iter().map(|r| r.modulus).fold(mu, f64::max).max(1e-12) * 1.15;
    let f = Frame {
        x0: -reach,
        x1: reach,
        y0: -reach,
        y1: reach,
    };
    let mut s = svg_open("characteristic roots");
    axes(&mut s, &f, "Re z", "Im z");
    let circle: Vec<(f64, f64)> = (0..=256)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / 256.0;
            (mu * th.cos(), mu * th.sin())
        })
        .collect();
    polyline(&mut s, &f, &circle, "mu-circle", "#7f7f7f", true);
    for r in roots {
        let size = 3.0 + 1.5 * r.multiplicity as f64;
        let _ = writeln!(
            s,
            r##"<circle class="root" cx="{:.2}" cy="{:.2}" r="{size}" fill="#1f77b4"><title>{} {:+}i (m={})</title></circle>"##,
            f.px(r.re),
            f.py(r.im),
            num(r.re),
            r.im,
            r.multiplicity
        );
    }
    legend(&mut s, &[("|z| = mu", "#7f7f7f", true)]);
    s.push_str("</svg>\n");
    s
}

/// Write every output the report has data for; returns the manifest.
pub fn emit_outputs(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = vec![write_atomic(dir, "report.json", report_json(report).as_bytes())?];
    if let Some(csv) = trajectories_csv(report) {
        manifest.push(write_atomic(dir, "trajectories.csv", &csv)?);
    }
    if let Some(csv) = spectrum_csv(report) {
        manifest.push(write_atomic(dir, "spectrum.csv", &csv)?);
    }
    if let Some(series) = &report.decay {
        manifest.push(write_atomic(dir, "decay.svg", decay_svg(series).as_bytes())?);
    }
    if let Some(s) = &report.spectrum {
        manifest.push(write_atomic(dir, "roots.svg", roots_svg(&s.roots, s.mu).as_bytes())?);
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(num(2.0), "2.0");
        assert_eq!(num(f64::NAN), "nan");
        for x in [0.975310887338245, 1.0 / 3.0, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn decay_plot_has_two_series() {
        let series = DecaySeries {
            measured: (20..60).map(|k| (k, 0.9f64.powi(k as i32))).collect(),
            reference_base: 0.95,
        };
        let svg = decay_svg(&series);
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert!(svg.contains(r#"data-name="measured""#) && svg.contains(r#"data-name="reference""#));
    }
}
