//! Sweep execution: capture, loop, receive chain, metrics, reports.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use wgnlink_core::capacity::{
    estimate_mi_mimo, generate_qam16, qam16_constellation, rrc_filter, to_symbol_rate, QamCapture,
};
use wgnlink_core::estimation::{remove_dispersion, SpectralWindow};
use wgnlink_core::signal_core::io::save_signal;
use wgnlink_core::signal_core::{generate_wgn_mimo, nmse_db, resample_mimo};
use wgnlink_core::{
    estimate_channel, estimate_mi_discrete, estimate_snr, impulse_response_from_channel, mdl_from_channel,
    run_link, run_pipeline, ComplexSignal, Dispersion, MimoSignal, PipelineConfig,
};

use crate::config::{ExperimentConfig, SweepPoint};
use crate::report::{self, ChannelRecord, MiRecord, CHANNEL_CSV, MI_16QAM_CSV, MI_CSV};

/// Symbols dropped at each end of a 16QAM capture, where the circular
/// matched filter wraps over the trimmed edges.
const QAM_EDGE_SYMBOLS: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("writing results to {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// A sweep point that did not complete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub sweep_value: f64,
    pub seed: u64,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<MiRecord>,
    pub channels: Vec<ChannelRecord>,
    pub failures: Vec<Failure>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'a str,
    config: &'a ExperimentConfig,
    rows: usize,
    failures: &'a [Failure],
    files: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Wgn,
    Qam16,
}

struct JobOutput {
    rows: Vec<MiRecord>,
    channel: Option<ChannelRecord>,
    failures: Vec<Failure>,
    files: Vec<PathBuf>,
}

fn stage<T, E: std::fmt::Display>(
    point: &SweepPoint,
    seed: u64,
    name: &str,
    r: std::result::Result<T, E>,
) -> std::result::Result<T, Failure> {
    r.map_err(|e| {
        log::warn!("point {} seed {seed}: {name} failed: {e}", point.value);
        Failure {
            sweep_value: point.value,
            seed,
            stage: name.into(),
            message: e.to_string(),
        }
    })
}

/// WGN sweep: per point and seed, MI and SNR per tributary; per point
/// (first seed), channel estimate, MDL spectrum and impulse response.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    run(cfg, Kind::Wgn)
}

/// The same sweep with root-raised-cosine 16QAM instead of WGN. MI is
/// computed over the known symbols; rows go to a separate table that the
/// plots overlay on the WGN results.
pub fn run_reference_16qam(cfg: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    run(cfg, Kind::Qam16)
}

fn run(cfg: &ExperimentConfig, kind: Kind) -> Result<ExperimentReport, RunError> {
    let out = &cfg.outputs;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Output { path, source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let points = cfg.sweep_points();
    let jobs: Vec<(&SweepPoint, u64)> = points
        .iter()
        .flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    log::info!("{} sweep points x {} seeds", points.len(), cfg.seeds.len());
    let outputs: Vec<JobOutput> = pool.install(|| {
        jobs.par_iter()
            .map(|&(point, seed)| {
                let characterize = kind == Kind::Wgn && seed == cfg.seeds[0];
                match kind {
                    Kind::Wgn => wgn_job(cfg, point, seed, characterize),
                    Kind::Qam16 => qam_job(cfg, point, seed),
                }
            })
            .collect()
    });

    let mut report = ExperimentReport::default();
    for o in outputs {
        report.rows.extend(o.rows);
        report.channels.extend(o.channel);
        report.failures.extend(o.failures);
        report.files.extend(o.files);
    }
    report::sort_mi(&mut report.rows);
    report.channels.sort_by_key(|c| c.point);
    report
        .failures
        .sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value).then(a.seed.cmp(&b.seed)));

    let (table, manifest_name, kind_name) = match kind {
        Kind::Wgn => (MI_CSV, "manifest.json", "wgn"),
        Kind::Qam16 => (MI_16QAM_CSV, "manifest_16qam.json", "16qam"),
    };
    let path = out.join(table);
    report::write_csv(&path, &report.rows).map_err(io(&path))?;
    report.files.push(path);
    if kind == Kind::Wgn {
        let path = out.join(CHANNEL_CSV);
        report::write_csv(&path, &report.channels).map_err(io(&path))?;
        report.files.push(path);
    }
    if cfg.emit_plots {
        report.files.extend(report::render_plots(out).map_err(io(out))?);
    }
    report.files.sort();
    report.files.dedup();

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind: kind_name,
        config: cfg,
        rows: report.rows.len(),
        failures: &report.failures,
        files: report
            .files
            .iter()
            .map(|f| f.strip_prefix(out).unwrap_or(f).display().to_string())
            .collect(),
    };
    let path = out.join(manifest_name);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json).map_err(io(&path))?;
    report.files.push(path);
    Ok(report)
}

fn capture(cfg: &ExperimentConfig, seed: u64) -> wgnlink_core::Result<MimoSignal> {
    let c = &cfg.capture;
    generate_wgn_mimo(cfg.link.n_modes, c.samples, c.sample_rate, c.power, seed)
}

fn record(
    cfg: &ExperimentConfig,
    kind: Kind,
    point: &SweepPoint,
    seed: u64,
    tributary: usize,
    snr_db: f64,
    mi_bits: f64,
    nmse: f64,
) -> MiRecord {
    MiRecord {
        signal: match kind {
            Kind::Wgn => "wgn".into(),
            Kind::Qam16 => "16qam".into(),
        },
        sweep_axis: cfg.axis().name().into(),
        sweep_value: point.value,
        seed,
        tributary,
        recirculations: point.recirculations,
        distance_km: point.link.distance_km(point.recirculations),
        launch_power_dbm: point.link.launch_power_dbm,
        span_snr_db: point.link.span_snr_db,
        snr_db,
        mi_bits,
        assumed_baud: match kind {
            Kind::Wgn => cfg.assumed_baud(),
            Kind::Qam16 => cfg.reference.baud,
        },
        nmse_db: nmse,
    }
}

fn empty(failure: Failure) -> JobOutput {
    JobOutput {
        rows: Vec::new(),
        channel: None,
        failures: vec![failure],
        files: Vec::new(),
    }
}

fn wgn_job(cfg: &ExperimentConfig, point: &SweepPoint, seed: u64, characterize: bool) -> JobOutput {
    let x = match stage(point, seed, "capture", capture(cfg, seed)) {
        Ok(x) => x,
        Err(f) => return empty(f),
    };
    let y = match stage(
        point,
        seed,
        "link",
        run_link(&x, &point.link, point.recirculations, seed),
    ) {
        Ok(y) => y,
        Err(f) => return empty(f),
    };
    let dispersion = point.link.dispersion(point.recirculations);
    let mut files = Vec::new();
    let mut failures = Vec::new();
    if cfg.save_captures {
        for (name, s) in [("in", &x), ("out", &y)] {
            let path = cfg
                .outputs
                .join(format!("capture_{:02}_seed{seed}_{name}.wgnc", point.index));
            match stage(point, seed, "save_captures", save_signal(s, &path)) {
                Ok(()) => files.push(path),
                Err(f) => failures.push(f),
            }
        }
    }

    let mut rows = Vec::new();
    match stage(
        point,
        seed,
        "pipeline",
        run_pipeline(&x, &y, &dispersion, &cfg.pipeline),
    )
    .and_then(|out| stage(point, seed, "metrics", wgn_metrics(cfg, &out.f_in, &out.f_eq)))
    {
        Ok((mi, snr, nmse)) => {
            for (m, (&bits, &s)) in mi.iter().zip(&snr).enumerate() {
                rows.push(record(cfg, Kind::Wgn, point, seed, m, s, bits, nmse));
            }
        }
        Err(f) => failures.push(f),
    }

    let mut channel = None;
    if characterize {
        match stage(
            point,
            seed,
            "channel_estimation",
            characterize_point(&cfg.outputs, &x, &y, &dispersion, &cfg.pipeline, point.index),
        ) {
            Ok((c, f)) => {
                channel = Some(ChannelRecord {
                    sweep_axis: cfg.axis().name().into(),
                    sweep_value: point.value,
                    seed,
                    recirculations: point.recirculations,
                    distance_km: point.link.distance_km(point.recirculations),
                    ..c
                });
                files.extend(f);
            }
            Err(f) => failures.push(f),
        }
    }
    JobOutput {
        rows,
        channel,
        failures,
        files,
    }
}

/// Per-tributary MI and SNR at the assumed baud, and the overall NMSE.
fn wgn_metrics(
    cfg: &ExperimentConfig,
    f_in: &MimoSignal,
    f_eq: &MimoSignal,
) -> wgnlink_core::Result<(Vec<f64>, Vec<f64>, f64)> {
    let baud = cfg.assumed_baud();
    let mi = estimate_mi_mimo(f_in, f_eq, &cfg.mi, baud)?;
    let xs = to_symbol_rate(f_in, baud)?;
    let ys = to_symbol_rate(f_eq, baud)?;
    let snr = (0..xs.modes())
        .map(|m| estimate_snr(&xs.signal(m), &ys.signal(m)))
        .collect::<wgnlink_core::Result<Vec<f64>>>()?;
    Ok((mi.per_tributary_bits, snr, nmse_db(f_eq, f_in)?))
}

/// Channel estimate of one capture pair; writes the MDL spectrum (two or
/// more tributaries) and the impulse response after bulk dispersion
/// removal. `index` numbers the output files.
pub fn characterize_point(
    dir: &Path,
    f_in: &MimoSignal,
    f_out: &MimoSignal,
    dispersion: &Dispersion,
    pipeline: &PipelineConfig,
    index: usize,
) -> wgnlink_core::Result<(ChannelRecord, Vec<PathBuf>)> {
    let est = estimate_channel(f_in, f_out, Some(dispersion), pipeline)?;
    let mut files = Vec::new();
    let (mut mdl_mean, mut mdl_max, mut mdl_csv) = (None, None, None);
    if est.channel.modes() >= 2 {
        let mdl = mdl_from_channel(&est.channel, Some(pipeline.filter_bw))?;
        let name = format!("mdl_{index:02}.csv");
        mdl.write_csv(dir.join(&name))?;
        files.push(dir.join(&name));
        mdl_mean = mdl.mean_db();
        mdl_max = mdl.max_db();
        mdl_csv = Some(name);
    }
    let ir = impulse_response_from_channel(
        &remove_dispersion(&est.channel, dispersion)?,
        SpectralWindow::for_filter(pipeline.filter_bw),
    );
    let name = format!("impulse_{index:02}.csv");
    ir.write_csv(dir.join(&name))?;
    files.push(dir.join(&name));
    let record = ChannelRecord {
        point: index,
        sweep_axis: String::new(),
        sweep_value: 0.0,
        seed: 0,
        recirculations: 0,
        distance_km: dispersion.length_km,
        lag: est.alignment.lag,
        mdl_mean_db: mdl_mean,
        mdl_max_db: mdl_max,
        dynamic_range_db: ir.dynamic_range_db,
        mdl_csv,
        impulse_csv: name,
    };
    Ok((record, files))
}

/// 16QAM waveform at the capture rate; the symbols are generated at two
/// samples per symbol and resampled.
pub fn qam_capture(cfg: &ExperimentConfig, seed: u64) -> wgnlink_core::Result<QamCapture> {
    let r = &cfg.reference;
    let c = &cfg.capture;
    let n_symbols = (c.samples as f64 * r.baud / c.sample_rate).floor() as usize;
    let cap = generate_qam16(
        cfg.link.n_modes,
        n_symbols,
        r.baud,
        2.0 * r.baud,
        r.rolloff,
        c.power,
        seed,
    )?;
    Ok(QamCapture {
        signal: resample_mimo(&cap.signal, c.sample_rate)?,
        symbols: cap.symbols,
    })
}

fn qam_job(cfg: &ExperimentConfig, point: &SweepPoint, seed: u64) -> JobOutput {
    let result = (|| {
        let cap = stage(point, seed, "capture", qam_capture(cfg, seed))?;
        let y = stage(
            point,
            seed,
            "link",
            run_link(&cap.signal, &point.link, point.recirculations, seed),
        )?;
        let pipeline = PipelineConfig {
            filter_bw: cfg.reference.filter_bw,
            ..cfg.pipeline.clone()
        };
        let dispersion = point.link.dispersion(point.recirculations);
        let out = stage(
            point,
            seed,
            "pipeline",
            run_pipeline(&cap.signal, &y, &dispersion, &pipeline),
        )?;
        let start = (-out.alignment.lag).max(0) as usize;
        let metrics = qam_metrics(
            &cap.symbols,
            &out.f_eq,
            start,
            cfg.reference.baud,
            cfg.reference.rolloff,
        );
        let (mi, snr) = stage(point, seed, "metrics", metrics)?;
        let nmse = stage(point, seed, "metrics", nmse_db(&out.f_eq, &out.f_in))?;
        Ok::<_, Failure>(
            mi.iter()
                .zip(&snr)
                .enumerate()
                .map(|(m, (&bits, &s))| record(cfg, Kind::Qam16, point, seed, m, s, bits, nmse))
                .collect(),
        )
    })();
    match result {
        Ok(rows) => JobOutput {
            rows,
            channel: None,
            failures: Vec::new(),
            files: Vec::new(),
        },
        Err(f) => empty(f),
    }
}

/// Matched filter, symbol-center sampling and discrete MI per tributary.
/// `start` is the index of `f_eq[0]` in the transmitted waveform at the
/// equalizer rate.
pub fn qam_metrics(
    symbols: &[Vec<wgnlink_core::C64>],
    f_eq: &MimoSignal,
    start: usize,
    baud: f64,
    rolloff: f64,
) -> wgnlink_core::Result<(Vec<f64>, Vec<f64>)> {
    let sps = (f_eq.sample_rate() / baud).round() as usize;
    let matched = rrc_filter(f_eq, baud, rolloff)?;
    let first = (sps - start % sps) % sps;
    let sampled = matched.decimate(sps, first)?;
    let k0 = (start + first) / sps;
    let n = sampled.len().min(symbols[0].len().saturating_sub(k0));
    if n <= 2 * QAM_EDGE_SYMBOLS {
        return Err(wgnlink_core::Error::InvalidArgument(
            "capture too short for 16QAM metrics".into(),
        ));
    }
    let range = QAM_EDGE_SYMBOLS..n - QAM_EDGE_SYMBOLS;
    let constellation = qam16_constellation();
    let mut mi = Vec::new();
    let mut snr = Vec::new();
    for (m, tx) in symbols.iter().enumerate() {
        let tx = ComplexSignal::new(tx[k0 + range.start..k0 + range.end].to_vec(), baud)?;
        let rx = ComplexSignal::new(sampled.tributary(m)[range.clone()].to_vec(), baud)?;
        mi.push(estimate_mi_discrete(tx.samples(), &rx, &constellation)?);
        snr.push(estimate_snr(&tx, &rx)?);
    }
    Ok((mi, snr))
}
