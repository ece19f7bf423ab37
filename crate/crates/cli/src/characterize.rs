//! Channel characterization from stored capture files.

use std::path::{Path, PathBuf};

use serde::Serialize;
use wgnlink_core::signal_core::io::load_signal;

use crate::config::ExperimentConfig;
use crate::experiment::characterize_point;
use crate::report::{self, ChannelRecord, CHANNEL_CSV};

#[derive(Debug, thiserror::Error)]
pub enum CharacterizeError {
    #[error("loading {path}: {source}")]
    Load {
        path: PathBuf,
        source: wgnlink_core::Error,
    },
    #[error(transparent)]
    Estimate(#[from] wgnlink_core::Error),
    #[error("writing results: {0}")]
    Output(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizeReport {
    pub channel: ChannelRecord,
    pub files: Vec<PathBuf>,
}

/// Estimates the channel between two captures that went through
/// `recirculations` passes of the configured link, and writes the MDL
/// spectrum, impulse response and (optionally) their plots.
pub fn characterize(
    cfg: &ExperimentConfig,
    f_in_path: &Path,
    f_out_path: &Path,
    recirculations: usize,
) -> Result<CharacterizeReport, CharacterizeError> {
    let load = |p: &Path| {
        load_signal(p).map_err(|source| CharacterizeError::Load {
            path: p.to_path_buf(),
            source,
        })
    };
    let f_in = load(f_in_path)?;
    let f_out = load(f_out_path)?;
    std::fs::create_dir_all(&cfg.outputs)?;
    let dispersion = cfg.link.dispersion(recirculations);
    let (record, mut files) = characterize_point(&cfg.outputs, &f_in, &f_out, &dispersion, &cfg.pipeline, 0)?;
    let record = ChannelRecord {
        sweep_axis: "recirculations".into(),
        sweep_value: recirculations as f64,
        recirculations,
        ..record
    };
    let path = cfg.outputs.join(CHANNEL_CSV);
    report::write_csv(&path, std::slice::from_ref(&record))?;
    files.push(path);
    if cfg.emit_plots {
        files.extend(report::render_channel_plots(
            &cfg.outputs,
            std::slice::from_ref(&record),
        )?);
    }
    log::info!(
        "lag {} samples, dynamic range {:.1} dB, mean MDL {}",
        record.lag,
        record.dynamic_range_db,
        record
            .mdl_mean_db
            .map_or("n/a".to_string(), |v| format!("{v:.2} dB"))
    );
    Ok(CharacterizeReport {
        channel: record,
        files,
    })
}
