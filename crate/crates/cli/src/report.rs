//! Result tables and the plots drawn from them.
//!
//! Plots are rendered from the CSV files alone, so deleting the SVGs and
//! calling [`render_plots`] on an output directory reproduces them.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::plot::{Plot, Series, Style};

pub const MI_CSV: &str = "mi.csv";
pub const MI_16QAM_CSV: &str = "mi_16qam.csv";
pub const CHANNEL_CSV: &str = "channel.csv";

/// One tributary of one sweep point and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRecord {
    pub signal: String,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub tributary: usize,
    pub recirculations: usize,
    pub distance_km: f64,
    pub launch_power_dbm: f64,
    pub span_snr_db: f64,
    /// Measured after equalization at the symbol rate.
    pub snr_db: f64,
    pub mi_bits: f64,
    pub assumed_baud: f64,
    pub nmse_db: f64,
}

/// Channel characterization of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub point: usize,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub recirculations: usize,
    pub distance_km: f64,
    pub lag: i64,
    pub mdl_mean_db: Option<f64>,
    pub mdl_max_db: Option<f64>,
    pub dynamic_range_db: f64,
    pub mdl_csv: Option<String>,
    pub impulse_csv: String,
}

pub fn sort_mi(rows: &mut [MiRecord]) {
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.seed.cmp(&b.seed))
            .then(a.tributary.cmp(&b.tributary))
    });
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(std::io::Error::other))
        .collect()
}

/// Mean MI over tributaries and seeds per sweep value, sorted by `key`.
fn mean_curve(rows: &[MiRecord], key: impl Fn(&MiRecord) -> f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        let k = key(r);
        match out.iter_mut().find(|(x, _, _)| *x == k) {
            Some(e) => {
                e.1 += r.mi_bits;
                e.2 += 1;
            }
            None => out.push((k, r.mi_bits, 1)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(x, s, n)| (x, s / n as f64)).collect()
}

#[derive(Debug, Deserialize)]
struct MdlRow {
    frequency_hz: f64,
    mdl_db: f64,
}

/// Redraws every plot of an output directory from its CSV files and
/// returns the files written.
pub fn render_plots(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut save = |name: &str, plot: Plot| -> std::io::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, plot.to_svg())?;
        written.push(path);
        Ok(())
    };
    let load = |name: &str| -> std::io::Result<Vec<MiRecord>> {
        let p = dir.join(name);
        if p.exists() {
            read_csv(&p)
        } else {
            Ok(Vec::new())
        }
    };
    let wgn = load(MI_CSV)?;
    let qam = load(MI_16QAM_CSV)?;

    let axis = wgn.first().or(qam.first()).map(|r| r.sweep_axis.clone());
    if let Some(axis) = axis {
        let (name, title, x_label): (_, _, _) = match axis.as_str() {
            "recirculations" => ("mi_vs_distance.svg", "MI vs distance", "distance (km)"),
            "launch_power_dbm" => (
                "mi_vs_launch_power.svg",
                "MI vs launch power",
                "launch power (dBm)",
            ),
            _ => ("mi_vs_span_snr.svg", "MI vs span SNR", "span SNR (dB)"),
        };
        let key = |r: &MiRecord| match axis.as_str() {
            "recirculations" => r.distance_km,
            "launch_power_dbm" => r.launch_power_dbm,
            _ => r.span_snr_db,
        };
        let mut plot = Plot::new(title, x_label, "MI (bits/symbol per tributary)");
        if !wgn.is_empty() {
            plot = plot
                .with(Series::new("WGN mean", mean_curve(&wgn, key), Style::LineMarkers))
                .with(Series::new(
                    "WGN per tributary",
                    wgn.iter().map(|r| (key(r), r.mi_bits)).collect(),
                    Style::Markers,
                ));
        }
        if !qam.is_empty() {
            plot = plot.with(Series::new(
                "16QAM mean",
                mean_curve(&qam, key),
                Style::LineMarkers,
            ));
        }
        save(name, plot)?;

        // MI against the measured SNR with the Shannon limit.
        let snrs: Vec<f64> = wgn
            .iter()
            .chain(&qam)
            .map(|r| r.snr_db)
            .filter(|v| v.is_finite())
            .collect();
        if !snrs.is_empty() {
            let lo = snrs.iter().copied().fold(f64::INFINITY, f64::min).floor() - 1.0;
            let hi = snrs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
            let shannon = (0..=100)
                .map(|i| {
                    let s = lo + (hi - lo) * i as f64 / 100.0;
                    (s, (1.0 + 10f64.powf(s / 10.0)).log2())
                })
                .collect();
            let mut plot = Plot::new("MI vs measured SNR", "SNR (dB)", "MI (bits/symbol per tributary)")
                .with(Series::new("log2(1+SNR)", shannon, Style::Dashed));
            if !wgn.is_empty() {
                plot = plot.with(Series::new(
                    "WGN",
                    wgn.iter().map(|r| (r.snr_db, r.mi_bits)).collect(),
                    Style::Markers,
                ));
            }
            if !qam.is_empty() {
                plot = plot.with(Series::new(
                    "16QAM",
                    qam.iter().map(|r| (r.snr_db, r.mi_bits)).collect(),
                    Style::Markers,
                ));
            }
            save("mi_vs_snr.svg", plot)?;
        }
    }

    let channel_path = dir.join(CHANNEL_CSV);
    if channel_path.exists() {
        let channels: Vec<ChannelRecord> = read_csv(&channel_path)?;
        written.extend(render_channel_plots(dir, &channels)?);
    }
    Ok(written)
}

fn point_label(c: &ChannelRecord) -> String {
    match c.sweep_axis.as_str() {
        "recirculations" => format!("{} km", c.distance_km),
        "launch_power_dbm" => format!("{} dBm", c.sweep_value),
        "snr_db" => format!("{} dB span SNR", c.sweep_value),
        _ => format!("point {}", c.point),
    }
}

/// MDL and impulse-response plots for the characterized sweep points.
pub fn render_channel_plots(dir: &Path, channels: &[ChannelRecord]) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut mdl = Plot::new("Mode-dependent loss", "frequency (GHz)", "MDL (dB)");
    let mut ir = Plot::new("Impulse response", "delay (ns)", "power (dB rel. peak)");
    ir.y_range = Some((-80.0, 5.0));
    for c in channels {
        if let Some(name) = &c.mdl_csv {
            let rows: Vec<MdlRow> = read_csv(&dir.join(name))?;
            mdl.series.push(Series::new(
                point_label(c),
                rows.iter().map(|r| (r.frequency_hz * 1e-9, r.mdl_db)).collect(),
                Style::Line,
            ));
        }
        ir.series.push(Series::new(
            point_label(c),
            impulse_power(&dir.join(&c.impulse_csv))?,
            Style::Line,
        ));
    }
    if !mdl.series.is_empty() {
        let path = dir.join("mdl.svg");
        std::fs::write(&path, mdl.to_svg())?;
        written.push(path);
    }
    if !ir.series.is_empty() {
        let path = dir.join("impulse_response.svg");
        std::fs::write(&path, ir.to_svg())?;
        written.push(path);
    }
    Ok(written)
}

/// Summed power over all matrix entries per tap, dB relative to the peak.
fn impulse_power(path: &Path) -> std::io::Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut pts = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(std::io::Error::other);
        let t = parse(&rec[0])?;
        let mut p = 0.0;
        for v in rec.iter().skip(1) {
            p += 10f64.powf(parse(v)? / 10.0);
        }
        pts.push((t * 1e9, p));
    }
    let peak = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(pts
        .into_iter()
        .map(|(t, p)| (t, 10.0 * (p / peak).max(1e-30).log10()))
        .collect())
}
