//! Experiment configuration file (JSON).
//!
//! One file describes the scenarios plus optional per-experiment sections;
//! each CLI subcommand reads the sections it needs and fails with a message
//! naming the missing or offending key. The repository ships ready-made
//! configs under `configs/`.

use crate::bm::TrainingConfig;
use crate::channel::ChannelParams;
use crate::crn_detectors::{DetectionMode, SamplingPolicy};
use crate::error::Error;
use crate::experiments::NoiseSchedule;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One named channel scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub channel: ChannelParams,
}

/// Detector selection for BER runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorConfig {
    /// Count-threshold detector; omitting `nu` selects the optimal value.
    Threshold {
        #[serde(default)]
        nu: Option<usize>,
    },
    /// Boltzmann machine built for the optimal threshold; `m_samples`
    /// switches to sample-average decisions.
    BmMap {
        #[serde(default = "default_weight")]
        w_xy: f64,
        #[serde(default)]
        m_samples: Option<usize>,
    },
    /// Boltzmann machine reloaded from a serialized model file.
    BmFile {
        path: String,
        #[serde(default)]
        m_samples: Option<usize>,
    },
    /// Simulated Boltzmann-machine-derived CRN built for a threshold
    /// (optimal when omitted).
    TaylorCrn {
        #[serde(default)]
        nu: Option<usize>,
        #[serde(default = "default_weight")]
        w_xy: f64,
        #[serde(default = "default_weight")]
        k_scale: f64,
        #[serde(default)]
        sampling: SamplingPolicy,
    },
    /// Simulated low-complexity CRN with a fixed weight count (optimal
    /// threshold when omitted) and reservoir (minimal when omitted).
    LcCrn {
        #[serde(default)]
        n_w_on: Option<u64>,
        #[serde(default)]
        n_w_total: Option<u64>,
        #[serde(default = "default_weight")]
        k_on: f64,
        #[serde(default = "default_weight")]
        k_off: f64,
        #[serde(default)]
        sampling: SamplingPolicy,
    },
}

fn default_weight() -> f64 {
    1.0
}

/// Monte-Carlo BER settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerSection {
    #[serde(default = "default_max_errors")]
    pub max_errors: u64,
    #[serde(default = "default_symbol_cap")]
    pub symbol_cap: u64,
    pub detector: DetectorConfig,
}

fn default_max_errors() -> u64 {
    100
}

fn default_symbol_cap() -> u64 {
    10_000_000
}

/// Low-complexity detector parameters shared by the online experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcSection {
    #[serde(default = "default_weight")]
    pub k_on: f64,
    #[serde(default = "default_weight")]
    pub k_off: f64,
    /// Weight reservoir; defaults to the minimal size able to express any
    /// threshold the channel can require.
    #[serde(default)]
    pub n_w_total: Option<u64>,
}

impl Default for LcSection {
    fn default() -> Self {
        LcSection { k_on: 1.0, k_off: 1.0, n_w_total: None }
    }
}

/// Online-learning experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineSection {
    pub n_pilots: usize,
    #[serde(default)]
    pub lc: LcSection,
    #[serde(default = "default_detection")]
    pub detection: DetectionMode,
}

fn default_detection() -> DetectionMode {
    DetectionMode::Exact
}

/// Time-variant noise experiment settings. The channel here is described
/// explicitly because its `c_noise` follows the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeVariantSection {
    pub n_receptors: usize,
    pub delta_c: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub schedule: NoiseSchedule,
    #[serde(default)]
    pub lc: LcSection,
    #[serde(default = "default_detection")]
    pub detection: DetectionMode,
}

impl TimeVariantSection {
    /// Channel in force at the given pilot index.
    pub fn channel_at(&self, pilot: usize) -> Result<ChannelParams, Error> {
        ChannelParams::new(
            self.schedule.c_noise_at(pilot),
            self.delta_c,
            self.k_plus,
            self.k_minus,
            self.n_receptors,
        )
    }
}

/// Root configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub training: Option<TrainingSection>,
    #[serde(default)]
    pub ber: Option<BerSection>,
    #[serde(default)]
    pub online: Option<OnlineSection>,
    #[serde(default)]
    pub time_variant: Option<TimeVariantSection>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_replicates() -> usize {
    20
}

/// Training protocol without the per-replicate seed (seeds are derived from
/// the master seed by the harness).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSection {
    pub n_data_samples: usize,
    pub n_gibbs_samples: usize,
    pub n_steps: usize,
    #[serde(default)]
    pub lr_schedule: crate::bm::Schedule,
    /// Error target for per-snapshot BER evaluation.
    #[serde(default = "default_max_errors")]
    pub eval_max_errors: u64,
    /// Symbol cap for per-snapshot BER evaluation.
    #[serde(default = "default_symbol_cap")]
    pub eval_symbol_cap: u64,
}

impl TrainingSection {
    pub fn to_training_config(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            n_data_samples: self.n_data_samples,
            n_gibbs_samples: self.n_gibbs_samples,
            n_steps: self.n_steps,
            lr_schedule: self.lr_schedule.clone(),
            seed,
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate a configuration file. Error messages name the
    /// offending key.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_replicates == 0 {
            return Err(Error::Config("n_replicates must be positive".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("scenarios must not be empty".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if s.name.is_empty() {
                return Err(Error::Config(format!("scenarios[{i}].name must not be empty")));
            }
            s.channel
                .validate()
                .map_err(|e| Error::Config(format!("scenarios[{i}].channel: {e}")))?;
        }
        if let Some(t) = &self.training {
            if t.n_data_samples == 0 || t.n_gibbs_samples == 0 {
                return Err(Error::Config(
                    "training.n_data_samples and training.n_gibbs_samples must be positive".into(),
                ));
            }
            if t.eval_max_errors == 0 || t.eval_symbol_cap == 0 {
                return Err(Error::Config(
                    "training.eval_max_errors and training.eval_symbol_cap must be positive"
                        .into(),
                ));
            }
        }
        if let Some(b) = &self.ber {
            if b.max_errors == 0 || b.symbol_cap == 0 {
                return Err(Error::Config(
                    "ber.max_errors and ber.symbol_cap must be positive".into(),
                ));
            }
            validate_detector(&b.detector)?;
        }
        if let Some(o) = &self.online {
            if o.n_pilots == 0 {
                return Err(Error::Config("online.n_pilots must be positive".into()));
            }
            validate_lc(&o.lc, "online.lc")?;
            validate_detection(&o.detection, "online.detection")?;
        }
        if let Some(tv) = &self.time_variant {
            tv.schedule
                .validate()
                .map_err(|e| Error::Config(format!("time_variant.schedule: {e}")))?;
            tv.channel_at(0)
                .map_err(|e| Error::Config(format!("time_variant: {e}")))?;
            validate_lc(&tv.lc, "time_variant.lc")?;
            validate_detection(&tv.detection, "time_variant.detection")?;
        }
        Ok(())
    }
}

fn validate_lc(lc: &LcSection, key: &str) -> Result<(), Error> {
    if !(lc.k_on > 0.0 && lc.k_off > 0.0) {
        return Err(Error::Config(format!("{key}.k_on and {key}.k_off must be > 0")));
    }
    Ok(())
}

fn validate_detection(mode: &DetectionMode, key: &str) -> Result<(), Error> {
    if let DetectionMode::Sampled(policy) = mode {
        policy.validate().map_err(|e| Error::Config(format!("{key}: {e}")))?;
    }
    Ok(())
}

fn validate_detector(detector: &DetectorConfig) -> Result<(), Error> {
    let check_policy = |p: &SamplingPolicy| {
        p.validate().map_err(|e| Error::Config(format!("ber.detector.sampling: {e}")))
    };
    match detector {
        DetectorConfig::Threshold { .. } | DetectorConfig::BmFile { .. } => Ok(()),
        DetectorConfig::BmMap { w_xy, .. } => {
            if !(*w_xy > 0.0) {
                return Err(Error::Config("ber.detector.w_xy must be > 0".into()));
            }
            Ok(())
        }
        DetectorConfig::TaylorCrn { w_xy, k_scale, sampling, .. } => {
            if !(*w_xy > 0.0) {
                return Err(Error::Config("ber.detector.w_xy must be > 0".into()));
            }
            if !(*k_scale > 0.0) {
                return Err(Error::Config("ber.detector.k_scale must be > 0".into()));
            }
            check_policy(sampling)
        }
        DetectorConfig::LcCrn { k_on, k_off, sampling, .. } => {
            if !(*k_on > 0.0 && *k_off > 0.0) {
                return Err(Error::Config(
                    "ber.detector.k_on and ber.detector.k_off must be > 0".into(),
                ));
            }
            check_policy(sampling)
        }
    }
}
