//! Output files: CSV tables, JSON reports and small SVG plots.
//!
//! Every file starts with the tool version and the config hash, and with
//! any experiment warnings. Reals use 17 significant digits so identical
//! runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance lines shared by every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Stamp {
    pub config_hash: String,
    pub warnings: Vec<String>,
}

impl Stamp {
    pub fn lines(&self) -> Vec<String> {
        let mut v = vec![format!("enclosure {VERSION} config_sha256={}", self.config_hash)];
        v.extend(self.warnings.iter().cloned());
        v
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "tool": format!("enclosure {VERSION}"),
            "config_sha256": self.config_hash,
            "warnings": self.warnings,
        })
    }
}

/// A CSV table with a commented header.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(stamp: &Stamp, columns: &[&str]) -> Self {
        let mut text = String::new();
        for l in stamp.lines() {
            let _ = writeln!(text, "# {l}");
        }
        let _ = writeln!(text, "{}", columns.join(","));
        Csv { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// The output directory. All files of a command are written through it,
/// after the parallel computation has finished.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Serializes a float, mapping non-finite values to `null`.
pub fn json_f64(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// A minimal SVG canvas mapping a data rectangle onto the image.
pub struct Svg {
    width: f64,
    height: f64,
    margin: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl Svg {
    /// `equal_aspect` keeps one data unit the same length on both axes.
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), equal_aspect: bool) -> Self {
        let pad = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (mut xr, mut yr) = (pad(x_range), pad(y_range));
        if equal_aspect {
            let span = (xr.1 - xr.0).max(yr.1 - yr.0);
            let cx = 0.5 * (xr.0 + xr.1);
            let cy = 0.5 * (yr.0 + yr.1);
            xr = (cx - span / 2.0, cx + span / 2.0);
            yr = (cy - span / 2.0, cy + span / 2.0);
        }
        Svg {
            width: 480.0,
            height: 480.0,
            margin: 48.0,
            x_range: xr,
            y_range: yr,
            body: String::new(),
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        let px = self.margin + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * w;
        let py = self.height - self.margin - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * h;
        (px, py)
    }

    pub fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, y0) = self.map(self.x_range.0, self.y_range.0);
        let (x1, y1) = self.map(self.x_range.1, self.y_range.1);
        let _ = writeln!(
            self.body,
            r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(
            self.body,
            r##"<text x="{x0:.2}" y="{:.2}" font-size="11">{:.3}</text><text x="{x1:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.3}</text>"##,
            y0 + 14.0,
            self.x_range.0,
            y0 + 14.0,
            self.x_range.1
        );
        let _ = writeln!(
            self.body,
            r##"<text x="{:.2}" y="{y0:.2}" font-size="11" text-anchor="end">{:.3}</text><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.3}</text>"##,
            x0 - 4.0,
            self.y_range.0,
            x0 - 4.0,
            y1 + 10.0,
            self.y_range.1
        );
        let _ = writeln!(
            self.body,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
            0.5 * (x0 + x1),
            self.height - 10.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            r##"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"##,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(y_label)
        );
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| {
                let (px, py) = self.map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            self.points(pts)
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            self.points(pts)
        );
    }

    pub fn markers(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let (px, py) = self.map(x, y);
            let _ = writeln!(self.body, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{color}"/>"#);
        }
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = self.margin + 14.0 * i as f64 + 10.0;
            let x = self.margin + 8.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
                y - 4.0,
                x + 16.0,
                y - 4.0,
                x + 20.0,
                escape(label)
            );
        }
    }

    pub fn finish(self, stamp: &Stamp, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        for l in stamp.lines() {
            let _ = writeln!(s, "<!-- {} -->", l.replace("--", "- -"));
        }
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            self.width / 2.0,
            escape(title)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Range of the finite values, or `(0, 1)` when there are none.
pub fn finite_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo <= hi {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
