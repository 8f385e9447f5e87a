//! Scenario configuration: a versioned TOML document with defaults for every
//! field except the scene.

use std::path::Path;

use jrc_core::channel::{FadingModel, Scatterer};
use jrc_core::estim::EstimatorConfig;
use jrc_core::ofdma::OfdmaConfig;
use jrc_core::pmcw::{DelayPolicy, PmcwConfig};
use jrc_core::sigcore::{ArrayGeometry, DpskOrder};
use jrc_core::{C64, SPEED_OF_LIGHT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Pmcw,
    Ofdma,
    Golay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub waveform: Waveform,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: String,
    /// DPSK order, 2 or 4.
    #[serde(default = "defaults::dpsk_order")]
    pub dpsk_order: u32,
    /// False-alarm cap used for the reported detection probability.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub pmcw: PmcwSection,
    #[serde(default)]
    pub ofdma: OfdmaSection,
    #[serde(default)]
    pub golay: GolaySection,
    pub scene: SceneSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub af: AfSection,
}

mod defaults {
    pub fn trials() -> usize {
        100
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn output_dir() -> String {
        "jrcsim-out".into()
    }
    pub fn dpsk_order() -> u32 {
        4
    }
    pub fn alpha() -> f64 {
        1e-3
    }
    pub fn carrier() -> f64 {
        60e9
    }
    pub fn one() -> usize {
        1
    }
    pub fn half() -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmcwSection {
    pub code_length: usize,
    pub frames: usize,
    pub chip_duration_s: f64,
    pub carrier_hz: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing_over_lambda: f64,
    pub intra_block_doppler: bool,
    /// "reject" or "round".
    pub delay_policy: String,
}

impl Default for PmcwSection {
    fn default() -> Self {
        Self {
            code_length: 63,
            frames: 16,
            chip_duration_s: 2.5e-10,
            carrier_hz: defaults::carrier(),
            n_tx: defaults::one(),
            n_rx: 4,
            spacing_over_lambda: defaults::half(),
            intra_block_doppler: false,
            delay_policy: "round".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmaSection {
    pub subcarriers: usize,
    pub symbols: usize,
    pub spacing_hz: f64,
    pub cp_len: usize,
    pub carrier_hz: f64,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl Default for OfdmaSection {
    fn default() -> Self {
        Self {
            subcarriers: 64,
            symbols: 16,
            spacing_hz: 62.5e6,
            cp_len: 16,
            carrier_hz: defaults::carrier(),
            n_tx: defaults::one(),
            n_rx: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GolaySection {
    pub log2_length: u32,
    pub guard: usize,
    pub sample_rate_hz: f64,
}

impl Default for GolaySection {
    fn default() -> Self {
        Self {
            log2_length: 8,
            guard: 64,
            sample_rate_hz: 4e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Mono-static equivalent range `c τ / 2`, m.
    pub range_m: f64,
    #[serde(default)]
    pub velocity_mps: f64,
    #[serde(default)]
    pub angle_deg: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase_deg: f64,
    /// "swerling0", "swerling1", "swerling3" or "rician".
    #[serde(default = "default_fading")]
    pub fading: String,
    #[serde(default = "default_rician_k")]
    pub rician_k_db: f64,
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_fading() -> String {
    "swerling0".into()
}
fn default_rician_k() -> f64 {
    jrc_core::channel::DEFAULT_RICIAN_K_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub targets: Vec<TargetSpec>,
    /// Draw each trial's target parameters uniformly within one resolution
    /// cell around the configured values.
    #[serde(default)]
    pub jitter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub padding: [usize; 3],
    pub refine_factor: usize,
    pub threshold_db: f64,
    pub floor_factor: f64,
    pub max_targets: usize,
    pub interpolate: bool,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = EstimatorConfig::default();
        Self {
            padding: d.padding,
            refine_factor: d.refine_factor,
            threshold_db: d.threshold_db,
            floor_factor: d.floor_factor,
            max_targets: d.max_targets,
            interpolate: d.interpolate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Per-sample SNR of a unit-amplitude target, dB.
    pub snr_db: Vec<f64>,
    pub mux_percent: Vec<f64>,
    /// Trade-off weights written to objective.csv.
    pub weights: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            mux_percent: vec![50.0],
            weights: vec![0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AfSection {
    /// Odd number of Doppler rows, symmetric about zero.
    pub doppler_bins: usize,
    /// Largest lag in samples; 0 uses the code length or subcarrier count.
    pub max_lag: usize,
    /// Payload multiplexing used for the exported surface, percent.
    pub mux_percent: f64,
}

impl Default for AfSection {
    fn default() -> Self {
        Self {
            doppler_bins: 65,
            max_lag: 0,
            mux_percent: 50.0,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_toml())
    }

    /// SHA-256 of the canonical form, hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        need(
            self.version == CONFIG_VERSION,
            format!("version = {} is not supported (expected {CONFIG_VERSION})", self.version),
        );
        need(self.trials >= 1, "trials must be at least 1".into());
        need(
            matches!(self.dpsk_order, 2 | 4),
            format!("dpsk_order = {} must be 2 or 4", self.dpsk_order),
        );
        need(self.alpha > 0.0 && self.alpha < 1.0, format!("alpha = {} must lie in (0, 1)", self.alpha));

        let p = &self.pmcw;
        need(p.code_length >= 1, "pmcw.code_length must be at least 1".into());
        need(p.frames >= 1, "pmcw.frames must be at least 1".into());
        need(p.chip_duration_s > 0.0, "pmcw.chip_duration_s must be positive".into());
        need(p.carrier_hz > 0.0, "pmcw.carrier_hz must be positive".into());
        need(p.n_tx >= 1 && p.n_rx >= 1, "pmcw.n_tx and pmcw.n_rx must be at least 1".into());
        need(
            p.spacing_over_lambda > 0.0 && p.spacing_over_lambda <= 0.5,
            format!("pmcw.spacing_over_lambda = {} must lie in (0, 0.5]", p.spacing_over_lambda),
        );
        need(
            matches!(p.delay_policy.as_str(), "reject" | "round"),
            format!("pmcw.delay_policy = {:?} must be \"reject\" or \"round\"", p.delay_policy),
        );

        let o = &self.ofdma;
        need(o.subcarriers >= 1, "ofdma.subcarriers must be at least 1".into());
        need(o.symbols >= 1, "ofdma.symbols must be at least 1".into());
        need(o.spacing_hz > 0.0, "ofdma.spacing_hz must be positive".into());
        need(o.carrier_hz > 0.0, "ofdma.carrier_hz must be positive".into());
        need(o.n_tx >= 1 && o.n_rx >= 1, "ofdma.n_tx and ofdma.n_rx must be at least 1".into());

        let g = &self.golay;
        need(
            (1..=16).contains(&g.log2_length),
            format!("golay.log2_length = {} must lie in [1, 16]", g.log2_length),
        );
        need(g.sample_rate_hz > 0.0, "golay.sample_rate_hz must be positive".into());

        need(!self.scene.targets.is_empty(), "scene.targets must not be empty".into());
        for (i, t) in self.scene.targets.iter().enumerate() {
            need(t.range_m >= 0.0, format!("scene.targets[{i}].range_m must be non-negative"));
            need(
                t.angle_deg.abs() <= 90.0,
                format!("scene.targets[{i}].angle_deg = {} must lie in [-90, 90]", t.angle_deg),
            );
            need(
                parse_fading(&t.fading, t.rician_k_db).is_some(),
                format!("scene.targets[{i}].fading = {:?} is not a known model", t.fading),
            );
        }

        let e = &self.estimator;
        need(
            e.padding.iter().all(|&p| p >= 1) && e.refine_factor >= 1,
            "estimator.padding and estimator.refine_factor must be at least 1".into(),
        );
        need(e.threshold_db < 0.0, format!("estimator.threshold_db = {} must be below 0", e.threshold_db));
        need(e.floor_factor >= 0.0, "estimator.floor_factor must be non-negative".into());

        let s = &self.sweep;
        need(!s.snr_db.is_empty(), "sweep.snr_db must not be empty".into());
        need(!s.mux_percent.is_empty(), "sweep.mux_percent must not be empty".into());
        for (i, mu) in s.mux_percent.iter().enumerate() {
            need(
                (0.0..=100.0).contains(mu),
                format!("sweep.mux_percent[{i}] = {mu} must lie in [0, 100]"),
            );
        }
        for (i, w) in s.weights.iter().enumerate() {
            need((0.0..=1.0).contains(w), format!("sweep.weights[{i}] = {w} must lie in [0, 1]"));
        }
        need(
            self.af.doppler_bins % 2 == 1,
            format!("af.doppler_bins = {} must be odd", self.af.doppler_bins),
        );
        need(
            (0.0..=100.0).contains(&self.af.mux_percent),
            format!("af.mux_percent = {} must lie in [0, 100]", self.af.mux_percent),
        );
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn order(&self) -> DpskOrder {
        DpskOrder::from_order(self.dpsk_order).expect("validated order")
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let e = &self.estimator;
        EstimatorConfig {
            padding: e.padding,
            refine_factor: e.refine_factor,
            threshold_db: e.threshold_db,
            floor_factor: e.floor_factor,
            max_targets: e.max_targets,
            interpolate: e.interpolate,
        }
    }

    pub fn pmcw_config(&self, mux_percent: f64) -> jrc_core::Result<PmcwConfig> {
        let p = &self.pmcw;
        let cfg = PmcwConfig {
            code_length: p.code_length,
            frames: p.frames,
            chip_duration: p.chip_duration_s,
            carrier_hz: p.carrier_hz,
            mux_percent,
            geometry: ArrayGeometry::new(p.n_tx, p.n_rx, p.spacing_over_lambda, SPEED_OF_LIGHT / p.carrier_hz)?,
            intra_block_doppler: p.intra_block_doppler,
            delay_policy: if p.delay_policy == "reject" {
                DelayPolicy::Reject
            } else {
                DelayPolicy::Round
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ofdma_config(&self, mux_percent: f64) -> jrc_core::Result<OfdmaConfig> {
        let o = &self.ofdma;
        let cfg = OfdmaConfig {
            subcarriers: o.subcarriers,
            symbols: o.symbols,
            spacing_hz: o.spacing_hz,
            cp_len: o.cp_len,
            mux_percent,
            carrier_hz: o.carrier_hz,
            geometry: ArrayGeometry::half_wavelength(o.n_tx, o.n_rx, SPEED_OF_LIGHT / o.carrier_hz)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn carrier_hz(&self) -> f64 {
        match self.waveform {
            Waveform::Pmcw => self.pmcw.carrier_hz,
            Waveform::Ofdma | Waveform::Golay => self.ofdma.carrier_hz,
        }
    }

    /// Nominal scatterers of the configured scene (before jitter and fading).
    pub fn scatterers(&self) -> Vec<Scatterer> {
        let wavelength = SPEED_OF_LIGHT / self.carrier_hz();
        self.scene
            .targets
            .iter()
            .map(|t| {
                let mut s = Scatterer::point(
                    2.0 * t.range_m / SPEED_OF_LIGHT,
                    jrc_core::channel::doppler_from_velocity(t.velocity_mps, wavelength),
                    t.angle_deg.to_radians(),
                    C64::from_polar(t.amplitude, t.phase_deg.to_radians()),
                );
                s.fading = parse_fading(&t.fading, t.rician_k_db).expect("validated fading");
                s
            })
            .collect()
    }
}

fn parse_fading(name: &str, k_db: f64) -> Option<FadingModel> {
    match name {
        "swerling0" => Some(FadingModel::Swerling0),
        "swerling1" | "swerling2" => Some(FadingModel::SwerlingI2),
        "swerling3" | "swerling4" => Some(FadingModel::SwerlingIII4),
        "rician" => Some(FadingModel::rician_db(k_db)),
        _ => None,
    }
}
