//! Result files: CSV rows, JSON reports, SVG plots and run manifests.
//!
//! Every file written by the command-line front end is listed in a
//! `<primary output>.manifest.json` next to it, and every CSV row carries the
//! `run_id` of that manifest. Column meanings are listed in `docs/columns.md`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::optimizer::{OptResult, TraceRow};
use crate::pipeline::SecrecyReport;
use crate::source::Basis;

/// Hex SHA-256 of `text`.
pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Deterministic run identifier: the first 16 hex digits of the hash of
/// command, canonical config and seed.
pub fn run_id(command: &str, config_json: &str, seed: u64) -> String {
    sha256_hex(&format!("{command}\n{config_json}\n{seed}"))[..16].to_string()
}

const BASIS_FIELDS: [&str; 13] = [
    "p_select",
    "capacity",
    "i_ab",
    "i_ae",
    "q1_eve",
    "qmulti_eve",
    "y1_min",
    "e1y1_max",
    "e1_max",
    "q_ba",
    "e_ba",
    "q_bab",
    "e_bab",
];

/// Header of report CSV files.
pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "run_id",
        "attenuation_db",
        "distance_km",
        "mode",
        "intensity",
        "delta_x",
        "delta_z",
        "i_vac",
        "i_d",
        "vt_product",
        "eve_advantage",
        "n_cut",
        "rate",
        "rate_bits_per_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for b in [Basis::Z, Basis::X, Basis::Y] {
        let p = b.name().to_lowercase();
        h.extend(BASIS_FIELDS.iter().map(|f| format!("{p}_{f}")));
    }
    h.extend(["optimized", "opt_evaluations", "opt_grid_best_rate"].map(String::from));
    h
}

/// `f64` in shortest round-trip form; empty for missing values.
fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One CSV record matching [`csv_header`].
pub fn csv_record(run_id: &str, report: &SecrecyReport, opt: Option<&OptResult>) -> Vec<String> {
    let s = &report.source;
    let mut r = vec![
        run_id.to_string(),
        num(report.attenuation_db),
        num(report.distance_km),
        report.mode.name().to_string(),
        num(s.intensity_max),
        num(s.delta_x),
        num(s.delta_z),
        num(s.i_vac),
        num(s.i_d),
        num(s.vt_product),
        num(report.system.eve_advantage),
        report.system.n_cut.to_string(),
        num(report.rate),
        report.rate_bits_per_s.map(num).unwrap_or_default(),
    ];
    for b in [Basis::Z, Basis::X, Basis::Y] {
        match report.basis(b) {
            Some(k) => r.extend(
                [
                    k.p_select,
                    k.capacity,
                    k.i_ab,
                    k.eve.total,
                    k.eve.q_single,
                    k.eve.q_multi,
                    k.bounds.y1_min,
                    k.bounds.e1y1_max,
                    k.bounds.e1_max,
                    k.q_ba,
                    k.e_ba,
                    k.q_bab,
                    k.e_bab,
                ]
                .map(num),
            ),
            None => r.extend(BASIS_FIELDS.iter().map(|_| String::new())),
        }
    }
    match opt {
        Some(o) => r.extend([
            "true".to_string(),
            o.evaluations.to_string(),
            num(o.grid_best_rate),
        ]),
        None => r.extend(["false".to_string(), String::new(), String::new()]),
    }
    r
}

/// Report rows as CSV text, header first.
pub fn reports_csv(run_id: &str, rows: &[(SecrecyReport, Option<OptResult>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header())?;
    for (report, opt) in rows {
        w.write_record(csv_record(run_id, report, opt.as_ref()))?;
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is UTF-8"),
    )
}

/// Optimiser trace rows as CSV text; `attenuation_db` labels each row.
pub fn trace_csv(run_id: &str, traces: &[(f64, &[TraceRow])]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run_id",
        "attenuation_db",
        "step",
        "phase",
        "intensity",
        "delta_x",
        "delta_z",
        "rate",
        "score",
    ])?;
    for (db, rows) in traces {
        for t in rows.iter() {
            w.write_record([
                run_id.to_string(),
                num(*db),
                t.step.to_string(),
                t.phase.to_string(),
                num(t.intensity),
                num(t.delta_x),
                num(t.delta_z),
                num(t.rate),
                num(t.score),
            ])?;
        }
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is UTF-8"),
    )
}

/// A named polyline for [`svg_log_plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Line plot with a linear x-axis and a base-10 logarithmic y-axis.
/// Non-positive y values are not drawable and break the line.
pub fn svg_log_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 150.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let logs = series
        .iter()
        .flat_map(|s| s.points.iter().filter(|p| p.1 > 0.0).map(|p| p.1.log10()));
    let (ly0, ly1) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    let (d0, mut d1) = if ly0.is_finite() {
        (ly0.floor(), ly1.ceil())
    } else {
        (-6.0, 0.0)
    };
    if d1 <= d0 {
        d1 = d0 + 1.0;
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |ly: f64| top + (d1 - ly) / (d1 - d0) * ph;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        left + pw / 2.0,
        xml_escape(title)
    ));
    for d in (d0 as i64)..=(d1 as i64) {
        let y = py(d as f64);
        out.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>\n",
            left + pw
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>\n",
            left - 6.0,
            y + 4.0
        ));
    }
    for k in 0..=5 {
        let x = x0 + (x1 - x0) * k as f64 / 5.0;
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            px(x),
            top + ph + 18.0,
            format!("{x:.2}")
                .trim_end_matches('0')
                .trim_end_matches('.')
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        left + pw / 2.0,
        h - 15.0,
        xml_escape(x_label)
    ));
    out.push_str(&format!(
        "<text transform=\"translate(20 {:.2}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        top + ph / 2.0,
        xml_escape(y_label)
    ));
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            if y > 0.0 && y.is_finite() {
                segments.last_mut().unwrap().push((px(x), py(y.log10())));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
            for (x, y) in seg {
                out.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>\n"
                ));
            }
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            left + pw + 10.0,
            left + pw + 30.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            left + pw + 35.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Provenance record for one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub toolkit_version: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config_json: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            run_id: run_id(command, config_json, seed),
            config_hash: sha256_hex(config_json),
            seed,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    /// Path of the manifest belonging to `primary`.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut s = primary.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Writes `text` to `path` and records it.
    pub fn write_output(&mut self, path: &Path, text: &str) -> Result<()> {
        write_file(path, text)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes the manifest next to the first recorded output.
    pub fn finish(&self) -> Result<Option<PathBuf>> {
        let Some(primary) = self.outputs.first() else {
            return Ok(None);
        };
        let path = Self::path_for(primary);
        write_file(&path, &serde_json::to_string_pretty(self)?)?;
        Ok(Some(path))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
