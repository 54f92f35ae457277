//! Experiment harness: scenario configuration, Monte-Carlo BER estimation,
//! the training / online-learning / time-variant experiments, and CSV/SVG
//! emission.
//!
//! Determinism contract: every run is a pure function of `(config, seed)`.
//! Replicates fan out over a worker pool, each with an RNG stream derived
//! from the master seed and its `(scenario, replicate)` index, and results
//! merge by replicate index, so output bytes do not depend on thread count
//! or scheduling.

pub mod config;
pub mod figures;
pub mod report;
pub mod validate;

pub use config::{
    BerSection, DetectorConfig, ExperimentConfig, LcSection, OnlineSection, ScenarioConfig,
    TimeVariantSection, TrainingSection,
};

use crate::bm::Fvbm;
use crate::channel::{ChannelParams, ReceptorObservation, Symbol};
use crate::crn_detectors::{
    build_lc_crn, build_taylor_crn, crn_detect, LcDetectorState, SamplingPolicy, TaylorCrnParams,
};
use crate::error::Error;
use crate::reference::{LikelihoodModel, ThresholdDetector};
use crate::rng::StreamRng;
use serde::{Deserialize, Serialize};

/// Anything that maps a receptor observation to a symbol decision.
pub trait Detector {
    fn detect(&self, y: &ReceptorObservation, rng: &mut StreamRng) -> Symbol;
}

impl Detector for ThresholdDetector {
    fn detect(&self, y: &ReceptorObservation, _rng: &mut StreamRng) -> Symbol {
        ThresholdDetector::detect(self, y.n_bound())
    }
}

/// Boltzmann-machine detector; `m_samples = None` uses the deterministic
/// conditional-threshold decision, `Some(m)` the sample average of `m`
/// symbol-node draws.
pub struct BmDetector {
    pub bm: Fvbm,
    pub m_samples: Option<usize>,
}

impl Detector for BmDetector {
    fn detect(&self, y: &ReceptorObservation, rng: &mut StreamRng) -> Symbol {
        match self.m_samples {
            None => self.bm.detect_exact(y),
            Some(m) => self.bm.detect_sampled(y, m, rng),
        }
    }
}

/// Simulated Boltzmann-machine-derived CRN detector.
pub struct TaylorCrnDetector {
    pub params: TaylorCrnParams,
    pub policy: SamplingPolicy,
}

impl Detector for TaylorCrnDetector {
    fn detect(&self, y: &ReceptorObservation, rng: &mut StreamRng) -> Symbol {
        let mut det = build_taylor_crn(&self.params, y).expect("observation matches parameters");
        let sampling = self.policy.resolve(det.rate_on, det.rate_off);
        crn_detect(&mut det, &sampling, rng)
    }
}

/// Simulated low-complexity CRN detector with a fixed weight state.
pub struct LcCrnDetector {
    pub state: LcDetectorState,
    pub policy: SamplingPolicy,
}

impl Detector for LcCrnDetector {
    fn detect(&self, y: &ReceptorObservation, rng: &mut StreamRng) -> Symbol {
        let mut det = build_lc_crn(y.n_bound(), &self.state);
        let sampling = self.policy.resolve(det.rate_on, det.rate_off);
        crn_detect(&mut det, &sampling, rng)
    }
}

/// Monte-Carlo BER estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub symbols: u64,
    pub errors: u64,
    /// The symbol cap stopped the run before reaching the error target; the
    /// estimate is then only an upper-bound indication.
    pub capped: bool,
}

/// Simulate symbol -> observation -> detection until `max_errors` errors
/// accumulate or `symbol_cap` symbols have been sent.
pub fn run_ber(
    detector: &dyn Detector,
    channel: &ChannelParams,
    max_errors: u64,
    symbol_cap: u64,
    rng: &mut StreamRng,
) -> BerEstimate {
    assert!(max_errors > 0 && symbol_cap > 0);
    let mut errors = 0u64;
    let mut symbols = 0u64;
    while errors < max_errors && symbols < symbol_cap {
        let x = Symbol::sample_equiprobable(rng);
        let y = channel.sample_observation(x, rng);
        symbols += 1;
        if detector.detect(&y, rng) != x {
            errors += 1;
        }
    }
    BerEstimate {
        ber: errors as f64 / symbols as f64,
        symbols,
        errors,
        capped: errors < max_errors,
    }
}

/// Piecewise-constant background-noise schedule for the time-variant
/// experiment: `(pilot count, c_noise)` phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule(pub Vec<NoisePhase>);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePhase {
    pub pilots: usize,
    pub c_noise: f64,
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<(), Error> {
        if self.0.is_empty() {
            return Err(Error::invalid("noise schedule must have at least one phase"));
        }
        if self.0.iter().any(|p| p.pilots == 0) {
            return Err(Error::invalid("noise schedule phase durations must be positive"));
        }
        if self.0.iter().any(|p| !(p.c_noise >= 0.0)) {
            return Err(Error::invalid("noise schedule c_noise must be >= 0"));
        }
        Ok(())
    }

    pub fn total_pilots(&self) -> usize {
        self.0.iter().map(|p| p.pilots).sum()
    }

    /// Background level in force for the given pilot index.
    pub fn c_noise_at(&self, pilot: usize) -> f64 {
        let mut remaining = pilot;
        for phase in &self.0 {
            if remaining < phase.pilots {
                return phase.c_noise;
            }
            remaining -= phase.pilots;
        }
        self.0.last().expect("validated nonempty").c_noise
    }

    /// Ranges of pilot indices per phase, in order.
    pub fn phase_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.0
            .iter()
            .map(|p| {
                let range = start..start + p.pilots;
                start += p.pilots;
                range
            })
            .collect()
    }
}

/// Resolve the detector configured for BER runs against a scenario channel.
pub fn build_detector(
    cfg: &DetectorConfig,
    channel: &ChannelParams,
) -> Result<Box<dyn Detector>, Error> {
    let model = LikelihoodModel::from_channel(channel)?;
    let oracle = model.optimal_threshold();
    match cfg {
        DetectorConfig::Threshold { nu } => {
            let detector = match nu {
                Some(nu) => ThresholdDetector::new(*nu, channel.n_receptors)?,
                None => oracle,
            };
            Ok(Box::new(detector))
        }
        DetectorConfig::BmMap { w_xy, m_samples } => {
            let bm = Fvbm::map_detector(channel.n_receptors, oracle.nu(), *w_xy)?;
            Ok(Box::new(BmDetector { bm, m_samples: *m_samples }))
        }
        DetectorConfig::BmFile { path, m_samples } => {
            let file = std::fs::File::open(path).map_err(|e| {
                Error::Config(format!("detector.path: cannot open {path:?}: {e}"))
            })?;
            let bm = Fvbm::read_text(std::io::BufReader::new(file))?;
            if bm.n_receptors() != channel.n_receptors {
                return Err(Error::Config(format!(
                    "detector.path: model has {} receptors, channel has {}",
                    bm.n_receptors(),
                    channel.n_receptors
                )));
            }
            Ok(Box::new(BmDetector { bm, m_samples: *m_samples }))
        }
        DetectorConfig::TaylorCrn { nu, w_xy, k_scale, sampling } => {
            let nu = nu.unwrap_or(oracle.nu());
            let params = TaylorCrnParams::for_threshold(channel.n_receptors, nu, *w_xy, *k_scale)?;
            Ok(Box::new(TaylorCrnDetector { params, policy: *sampling }))
        }
        DetectorConfig::LcCrn { n_w_on, n_w_total, k_on, k_off, sampling } => {
            let total = n_w_total.unwrap_or_else(|| {
                crate::crn_detectors::min_reservoir(channel.n_receptors, *k_on, *k_off)
            });
            let on = n_w_on.unwrap_or(oracle.nu() as u64);
            let state = LcDetectorState::new(on, total.max(on), *k_on, *k_off)?;
            Ok(Box::new(LcCrnDetector { state, policy: *sampling }))
        }
    }
}
