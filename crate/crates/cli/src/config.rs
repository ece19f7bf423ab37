//! Experiment configuration files.
//!
//! The format is TOML, versioned by the top-level `version` key (currently
//! 1). Everything except the sweep has a default; `[link]` keys override the
//! chosen preset field by field.
//!
//! ```toml
//! version = 1
//! preset = "smf"            # or "fmf3"
//! seeds = [1, 2]
//! outputs = "results/smf"
//! emit_plots = true
//!
//! [sweep]
//! recirculations = [1, 2, 5, 10, 20]
//! # launch_power_dbm = [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0]
//! # snr_db = [5.0, 10.0, 15.0, 20.0]
//! # fixed_recirculations = 1
//!
//! [link]
//! span_snr_db = 25.0
//!
//! [pipeline]
//! filter_bw = 15e9
//!
//! [capture]
//! samples = 8388608
//! sample_rate = 40e9
//!
//! [mi]
//! n_rings = 16
//! phase_points = 64
//!
//! [reference]
//! baud = 30e9
//! rolloff = 0.1
//! filter_bw = 15e9
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wgnlink_core::capacity::MiConfig;
use wgnlink_core::{LinkConfig, PipelineConfig};

pub const CONFIG_VERSION: u32 = 1;
/// Capture length of a `--quick` run.
pub const QUICK_SAMPLES: usize = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    /// The message carries the line and column.
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 78 km single-mode fiber span, two polarizations.
    #[default]
    Smf,
    /// 96 km three-mode fiber span, six tributaries.
    Fmf3,
}

impl Preset {
    pub fn link(self) -> LinkConfig {
        match self {
            Self::Smf => LinkConfig::smf(),
            Self::Fmf3 => LinkConfig::three_mode_fiber(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recirculations: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launch_power_dbm: Option<Vec<f64>>,
    /// Per-span amplifier SNR values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    /// Loop passes for launch-power and SNR sweeps.
    #[serde(default = "one")]
    pub fixed_recirculations: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Recirculations(Vec<usize>),
    LaunchPower(Vec<f64>),
    Snr(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Recirculations(_) => "recirculations",
            Self::LaunchPower(_) => "launch_power_dbm",
            Self::Snr(_) => "snr_db",
        }
    }
}

impl SweepConfig {
    /// The single configured axis.
    pub fn axis(&self) -> Result<SweepAxis, ConfigError> {
        let set = [
            self.recirculations.is_some(),
            self.launch_power_dbm.is_some(),
            self.snr_db.is_some(),
        ];
        match set.iter().filter(|s| **s).count() {
            0 => return Err(invalid("sweep", "no sweep axis given")),
            1 => {}
            _ => return Err(invalid("sweep", "exactly one sweep axis is allowed")),
        }
        let axis = if let Some(v) = &self.recirculations {
            if v.contains(&0) {
                return Err(invalid("sweep.recirculations", "values must be at least 1"));
            }
            SweepAxis::Recirculations(v.clone())
        } else if let Some(v) = &self.launch_power_dbm {
            if v.iter().any(|p| !p.is_finite()) {
                return Err(invalid("sweep.launch_power_dbm", "values must be finite"));
            }
            SweepAxis::LaunchPower(v.clone())
        } else {
            let v = self.snr_db.as_ref().unwrap();
            if v.iter().any(|p| p.is_nan() || *p == f64::NEG_INFINITY) {
                return Err(invalid("sweep.snr_db", "values must be numbers or +inf"));
            }
            SweepAxis::Snr(v.clone())
        };
        let empty = match &axis {
            SweepAxis::Recirculations(v) => v.is_empty(),
            SweepAxis::LaunchPower(v) | SweepAxis::Snr(v) => v.is_empty(),
        };
        if empty {
            return Err(invalid(&format!("sweep.{}", axis.name()), "sweep list is empty"));
        }
        Ok(axis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureConfig {
    pub samples: usize,
    /// Hz
    pub sample_rate: f64,
    /// Launched power per tributary, arbitrary units.
    pub power: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            samples: 8 << 20,
            sample_rate: 40e9,
            power: 1.0,
        }
    }
}

/// The conventional-modulation reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub baud: f64,
    pub rolloff: f64,
    /// Receive filter bandwidth for the 16QAM run, Hz. Same as the WGN
    /// chain by default.
    pub filter_bw: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            baud: 30e9,
            rolloff: 0.1,
            filter_bw: 15e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub preset: Preset,
    pub link: LinkConfig,
    pub pipeline: PipelineConfig,
    pub sweep: SweepConfig,
    pub seeds: Vec<u64>,
    pub outputs: PathBuf,
    pub emit_plots: bool,
    pub save_captures: bool,
    /// Sweep jobs run at once.
    pub workers: usize,
    pub capture: CaptureConfig,
    pub mi: MiConfig,
    pub reference: ReferenceConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<u32>,
    preset: Option<Preset>,
    seeds: Option<Vec<u64>>,
    outputs: Option<PathBuf>,
    emit_plots: Option<bool>,
    save_captures: Option<bool>,
    workers: Option<usize>,
    sweep: Option<SweepConfig>,
    link: Option<toml::Table>,
    pipeline: Option<toml::Table>,
    capture: Option<toml::Table>,
    mi: Option<toml::Table>,
    reference: Option<toml::Table>,
}

/// Reads, defaults and checks a config file.
pub fn validate_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let Some(sweep) = raw.sweep else {
        return Err(invalid("sweep", "missing [sweep] section"));
    };
    let preset = raw.preset.unwrap_or_default();
    let cfg = ExperimentConfig {
        version: defaulted("version", raw.version, CONFIG_VERSION),
        preset: defaulted("preset", raw.preset, Preset::Smf),
        link: section("link", preset.link(), raw.link)?,
        pipeline: section("pipeline", PipelineConfig::default(), raw.pipeline)?,
        sweep,
        seeds: defaulted("seeds", raw.seeds, vec![1]),
        outputs: defaulted("outputs", raw.outputs, PathBuf::from("results")),
        emit_plots: defaulted("emit_plots", raw.emit_plots, true),
        save_captures: defaulted("save_captures", raw.save_captures, false),
        workers: defaulted("workers", raw.workers, 1),
        capture: section("capture", CaptureConfig::default(), raw.capture)?,
        mi: section("mi", MiConfig::default(), raw.mi)?,
        reference: section("reference", ReferenceConfig::default(), raw.reference)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn defaulted<T: std::fmt::Debug>(key: &str, value: Option<T>, default: T) -> T {
    value.unwrap_or_else(|| {
        log::info!("default {key} = {default:?}");
        default
    })
}

/// Overlays the user's keys on `base` and logs every key left at its
/// default.
fn section<T>(name: &str, base: T, user: Option<toml::Table>) -> Result<T, ConfigError>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut table = toml::Table::try_from(&base).map_err(|e| invalid(name, e.to_string()))?;
    let user = user.unwrap_or_default();
    for (key, value) in &table {
        if !user.contains_key(key) {
            log::info!("default {name}.{key} = {value}");
        }
    }
    for (key, value) in user {
        table.insert(key, value);
    }
    T::deserialize(table).map_err(|e| invalid(name, e.to_string()))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        self.sweep.axis()?;
        if self.sweep.fixed_recirculations == 0 {
            return Err(invalid("sweep.fixed_recirculations", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        self.link.validate().map_err(|e| invalid("link", e.to_string()))?;
        self.pipeline
            .validate()
            .map_err(|e| invalid("pipeline", e.to_string()))?;
        let c = &self.capture;
        if !(c.sample_rate.is_finite() && c.sample_rate > 0.0) {
            return Err(invalid("capture.sample_rate", "must be positive"));
        }
        if !(c.power.is_finite() && c.power > 0.0) {
            return Err(invalid("capture.power", "must be positive"));
        }
        if c.samples < 4 * self.pipeline.block_size {
            return Err(invalid(
                "capture.samples",
                format!("need at least {} samples", 4 * self.pipeline.block_size),
            ));
        }
        if self.mi.n_rings == 0 || self.mi.phase_points == 0 {
            return Err(invalid("mi", "n_rings and phase_points must be at least 1"));
        }
        let r = &self.reference;
        if !(r.baud.is_finite() && r.baud > 0.0) {
            return Err(invalid("reference.baud", "must be positive"));
        }
        if !(0.0..=1.0).contains(&r.rolloff) {
            return Err(invalid("reference.rolloff", "must be in [0, 1]"));
        }
        if !(r.filter_bw.is_finite() && r.filter_bw > 0.0) {
            return Err(invalid("reference.filter_bw", "must be positive"));
        }
        let sps = self.pipeline.target_rate / r.baud;
        if (sps - sps.round()).abs() > 1e-9 || sps < 1.0 {
            return Err(invalid(
                "reference.baud",
                "the pipeline target rate must be an integer multiple of the baud",
            ));
        }
        Ok(())
    }

    /// Symbol rate at which MI is reported.
    pub fn assumed_baud(&self) -> f64 {
        self.pipeline.assumed_baud()
    }

    pub fn axis(&self) -> SweepAxis {
        self.sweep.axis().expect("validated config")
    }

    /// Link and loop count of every sweep point, in sweep order.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let fixed = self.sweep.fixed_recirculations;
        let point = |index, value, recirculations, link| SweepPoint {
            index,
            value,
            recirculations,
            link,
        };
        match self.axis() {
            SweepAxis::Recirculations(v) => v
                .iter()
                .enumerate()
                .map(|(i, &r)| point(i, r as f64, r, self.link.clone()))
                .collect(),
            SweepAxis::LaunchPower(v) => v
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let link = LinkConfig {
                        launch_power_dbm: p,
                        ..self.link.clone()
                    };
                    point(i, p, fixed, link)
                })
                .collect(),
            SweepAxis::Snr(v) => v
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let link = LinkConfig {
                        span_snr_db: s,
                        ..self.link.clone()
                    };
                    point(i, s, fixed, link)
                })
                .collect(),
        }
    }

    /// Command-line overrides.
    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(out) = &o.outputs {
            self.outputs = out.clone();
        }
        if let Some(seeds) = &o.seeds {
            self.seeds = seeds.clone();
        }
        if o.quick {
            self.capture.samples = QUICK_SAMPLES;
        }
        if o.no_plots {
            self.emit_plots = false;
        }
        if o.save_captures {
            self.save_captures = true;
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub outputs: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub quick: bool,
    pub no_plots: bool,
    pub save_captures: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    /// Value on the sweep axis.
    pub value: f64,
    pub recirculations: usize,
    pub link: LinkConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "version = 1\n[sweep]\nrecirculations = [1, 20]\n";

    #[test]
    fn minimal_config_is_filled_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.link.dispersion_coeff, 17.0);
        assert_eq!(cfg.link.center_wavelength, 1550.0);
        assert_eq!(cfg.pipeline.filter_bw, 15e9);
        assert_eq!(cfg.pipeline.phase_window, 200);
        assert_eq!(cfg.mi.n_rings, 16);
        assert_eq!(cfg.seeds, vec![1]);
        assert_eq!(cfg.capture.samples, 8 << 20);
        assert_eq!(cfg.assumed_baud(), 30e9);
    }

    #[test]
    fn link_keys_override_the_preset() {
        let cfg = parse_config("preset = \"fmf3\"\n[link]\nspan_snr_db = 30.0\n[sweep]\nsnr_db = [10.0]\n")
            .unwrap();
        assert_eq!(cfg.link.n_modes, 6);
        assert_eq!(cfg.link.span_length, 96.0);
        assert_eq!(cfg.link.span_snr_db, 30.0);
        let points = cfg.sweep_points();
        assert_eq!(points[0].link.span_snr_db, 10.0);
        assert_eq!(points[0].recirculations, 1);
    }

    #[test]
    fn sweep_axis_rules() {
        let two = "[sweep]\nrecirculations = [1]\nsnr_db = [3.0]\n";
        assert!(matches!(parse_config(two), Err(ConfigError::Invalid { field, .. }) if field == "sweep"));
        let empty = "[sweep]\nlaunch_power_dbm = []\n";
        assert!(matches!(
            parse_config(empty),
            Err(ConfigError::Invalid { field, .. }) if field == "sweep.launch_power_dbm"
        ));
        assert!(parse_config("version = 1\n").is_err());
        assert!(parse_config("[sweep]\nrecirculations = [0]\n").is_err());
    }

    #[test]
    fn invalid_values_name_the_field() {
        let neg = "[link]\nspan_length = -1.0\n[sweep]\nrecirculations = [1]\n";
        match parse_config(neg) {
            Err(ConfigError::Invalid { field, message }) => {
                assert_eq!(field, "link");
                assert!(message.contains("span_length"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let seeds = "seeds = []\n[sweep]\nrecirculations = [1]\n";
        assert!(matches!(parse_config(seeds), Err(ConfigError::Invalid { field, .. }) if field == "seeds"));
        let version = "version = 7\n[sweep]\nrecirculations = [1]\n";
        assert!(
            matches!(parse_config(version), Err(ConfigError::Invalid { field, .. }) if field == "version")
        );
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let bad = "version = 1\n[sweep]\nrecirculations = [1,\n";
        let msg = parse_config(bad).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
        let typo = "[sweep]\nrecirculations = [1]\n[link]\nspan_lenght = 3.0\n";
        assert!(parse_config(typo)
            .unwrap_err()
            .to_string()
            .contains("span_lenght"));
    }

    #[test]
    fn overrides() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.apply_overrides(&Overrides {
            seeds: Some(vec![4, 5]),
            quick: true,
            no_plots: true,
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(cfg.capture.samples, QUICK_SAMPLES);
        assert!(!cfg.emit_plots);
        assert!(cfg
            .apply_overrides(&Overrides {
                seeds: Some(vec![]),
                ..Overrides::default()
            })
            .is_err());
    }
}
