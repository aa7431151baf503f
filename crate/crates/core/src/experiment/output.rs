//! CSV and SVG artifacts of a campaign.
//!
//! Schema version 1 (all files UTF-8 with a header row):
//!
//! * `records.csv`: point, value, drop, ut, mode, sync, attach, rate_bps,
//!   se_bps_hz, mean_sinr_db, desired_w, mui_w, ici_w, isi_w, noise_w
//! * `summary.csv`: point, mode, mean_R, median_R, stderr, mean_attach, value, samples
//! * `ecdf_<mode>.csv`: point, value, rate_bps, fraction
//! * `excluded.csv`: point, drop, excluded_uts
//! * `manifest.toml`: schema version, sweep description and the base scenario
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::ecdf;
use super::{CampaignResult, CampaignSpec, SyncDemo};
use crate::analysis::BoundPoint;
use crate::config::{AssociationMode, SyncMode};
use crate::error::{Result, SimError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub point: usize,
    pub value: String,
    pub drop: usize,
    pub ut: usize,
    pub mode: AssociationMode,
    pub sync: SyncMode,
    pub attach: usize,
    pub rate_bps: f64,
    pub se_bps_hz: f64,
    pub mean_sinr_db: f64,
    pub desired_w: f64,
    pub mui_w: f64,
    pub ici_w: f64,
    pub isi_w: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub point: usize,
    pub mode: AssociationMode,
    #[serde(rename = "mean_R")]
    pub mean_r: f64,
    #[serde(rename = "median_R")]
    pub median_r: f64,
    pub stderr: f64,
    pub mean_attach: f64,
    pub value: String,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfRow {
    pub point: usize,
    pub value: String,
    pub rate_bps: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub cp_add: usize,
    pub attach_probability: f64,
    pub desired_w: f64,
    pub mui_w: f64,
    pub ici_w: f64,
    pub isi_w: f64,
    pub bound: f64,
    pub bound_bps_hz: f64,
}

impl From<&BoundPoint> for BoundRow {
    fn from(b: &BoundPoint) -> Self {
        Self {
            cp_add: b.cp_add,
            attach_probability: b.attach_probability,
            desired_w: b.desired,
            mui_w: b.mui,
            ici_w: b.ici,
            isi_w: b.isi,
            bound: b.bound,
            bound_bps_hz: b.bound_per_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub attach: usize,
    pub random: usize,
    pub optimized: usize,
}

pub fn record_rows(result: &CampaignResult) -> Vec<RecordRow> {
    result
        .records
        .iter()
        .map(|r| RecordRow {
            point: r.point,
            value: result.labels[r.point].clone(),
            drop: r.drop,
            ut: r.ut,
            mode: r.mode,
            sync: r.sync,
            attach: r.attach,
            rate_bps: r.rate,
            se_bps_hz: r.spectral_efficiency,
            mean_sinr_db: r.mean_sinr_db,
            desired_w: r.desired,
            mui_w: r.mui,
            ici_w: r.ici,
            isi_w: r.isi,
            noise_w: r.noise,
        })
        .collect()
}

pub fn summary_rows(result: &CampaignResult) -> Vec<SummaryRow> {
    result
        .summaries
        .iter()
        .map(|s| SummaryRow {
            point: s.point,
            mode: s.mode,
            mean_r: s.mean_rate,
            median_r: s.median_rate,
            stderr: s.stderr,
            mean_attach: s.mean_attach,
            value: s.label.clone(),
            samples: s.samples,
        })
        .collect()
}

pub fn ecdf_rows(result: &CampaignResult, mode: AssociationMode) -> Result<Vec<EcdfRow>> {
    let mut rows = Vec::new();
    for (p, label) in result.labels.iter().enumerate() {
        let rates = result.rates(p, mode);
        if rates.is_empty() {
            continue;
        }
        rows.extend(ecdf(&rates)?.into_iter().map(|(x, f)| EcdfRow {
            point: p,
            value: label.clone(),
            rate_bps: x,
            fraction: f,
        }));
    }
    Ok(rows)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| SimError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| SimError::csv(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SimError::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| SimError::csv(path, e))).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SimError::io(path, e))
}

fn manifest(result: &CampaignResult, spec: &CampaignSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "schema_version = {SCHEMA_VERSION}");
    let _ = writeln!(s, "axis = \"{}\"", result.axis);
    let _ = writeln!(s, "values = {:?}", result.labels);
    let _ = writeln!(s, "drops = {}", result.drops);
    let modes: Vec<&str> = result.modes.iter().map(|m| m.name()).collect();
    let _ = writeln!(s, "modes = {modes:?}");
    let _ = writeln!(s, "paired_points = {}", spec.paired_points);
    let _ = writeln!(s, "excluded_uts = {}", result.total_excluded());
    let _ = writeln!(s, "\n[scenario]");
    s.push_str(&spec.base.to_toml());
    s
}

/// Writes every campaign artifact into `dir` (created if missing) and returns the paths.
pub fn emit_outputs(result: &CampaignResult, spec: &CampaignSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    write_csv(&put("records.csv"), &record_rows(result))?;
    write_csv(&put("summary.csv"), &summary_rows(result))?;
    for &mode in &result.modes {
        write_csv(&put(&format!("ecdf_{mode}.csv")), &ecdf_rows(result, mode)?)?;
    }
    let excluded: Vec<(usize, usize, usize)> = result.excluded.clone();
    let p = put("excluded.csv");
    let mut w = csv::Writer::from_path(&p).map_err(|e| SimError::csv(&p, e))?;
    w.write_record(["point", "drop", "excluded_uts"]).map_err(|e| SimError::csv(&p, e))?;
    for (a, b, c) in excluded {
        w.serialize((a, b, c)).map_err(|e| SimError::csv(&p, e))?;
    }
    w.flush().map_err(|e| SimError::io(&p, e))?;
    write_text(&put("manifest.toml"), &manifest(result, spec))?;

    if spec.emit_plots {
        for (point, label) in result.labels.iter().enumerate() {
            let mut chart = Chart::new(
                if label.is_empty() {
                    "ECDF of per-UT throughput".to_string()
                } else {
                    format!("ECDF of per-UT throughput ({} = {label})", result.axis)
                },
                "throughput (Mbit/s)",
                "fraction of UTs",
            );
            chart.step = true;
            for &mode in &result.modes {
                if let Ok(t) = ecdf(&result.rates(point, mode)) {
                    chart.series.push((mode.name().to_string(), t.into_iter().map(|(x, f)| (x / 1e6, f)).collect()));
                }
            }
            write_text(&put(&format!("ecdf_point{point}.svg")), &chart.render())?;
        }
        if result.labels.len() > 1 {
            let xs: Vec<f64> = result
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| l.parse::<f64>().unwrap_or(i as f64))
                .collect();
            let mut chart = Chart::new("Mean throughput per UT".into(), result.axis.name(), "mean throughput (Mbit/s)");
            for &mode in &result.modes {
                let pts = result
                    .summaries
                    .iter()
                    .filter(|s| s.mode == mode)
                    .map(|s| (xs[s.point], s.mean_rate / 1e6))
                    .collect();
                chart.series.push((mode.name().to_string(), pts));
            }
            write_text(&put("summary.svg"), &chart.render())?;
        }
    }
    Ok(written)
}

pub fn write_bound_csv(path: &Path, curve: &[BoundPoint]) -> Result<()> {
    write_csv(path, &curve.iter().map(BoundRow::from).collect::<Vec<_>>())
}

pub fn write_sync_demo_csv(path: &Path, demo: &SyncDemo, n_sats: usize) -> Result<()> {
    let rows: Vec<HistogramRow> = demo
        .histogram(n_sats)
        .into_iter()
        .map(|(attach, random, optimized)| HistogramRow { attach, random, optimized })
        .collect();
    write_csv(path, &rows)
}

/// Minimal line/step chart rendered to standalone SVG.
#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub step: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Chart {
    pub fn new(title: String, x_label: &str, y_label: &str) -> Self {
        Self {
            title,
            x_label: x_label.into(),
            y_label: y_label.into(),
            step: false,
            series: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 130.0, 40.0, 50.0);
        let pts = self.series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        y0 = y0.min(0.0);
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
        let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - ml - mr,
            h - mt - mb
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.3}</text>"#, sx(fx), h - mb + 16.0, fx);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, ml - 6.0, sy(fy) + 4.0, fy);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ml + w - mr) / 2.0, h - 10.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (mt + h - mb) / 2.0,
            escape(&self.y_label)
        );
        for (i, (name, data)) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mut path = String::new();
            let mut prev_y = None;
            for &(x, y) in data.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                if path.is_empty() {
                    let _ = write!(path, "M{:.2},{:.2}", sx(x), sy(if self.step { y0 } else { y }));
                    if self.step {
                        let _ = write!(path, " L{:.2},{:.2}", sx(x), sy(y));
                    }
                } else {
                    if self.step {
                        let _ = write!(path, " L{:.2},{:.2}", sx(x), sy(prev_y.unwrap_or(y)));
                    }
                    let _ = write!(path, " L{:.2},{:.2}", sx(x), sy(y));
                }
                prev_y = Some(y);
            }
            if !path.is_empty() {
                let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
            }
            let ly = mt + 16.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
                w - mr + 10.0,
                w - mr + 30.0,
                w - mr + 36.0,
                ly + 4.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
